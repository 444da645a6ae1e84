//! F0 and vocal-tract-length manipulation in semitones.
//!
//! F0 shifts run pitch-synchronous overlap-add directly. A VTL shift first
//! resamples (scaling formants and F0 together by `1 / 2^(st/12)`), then
//! uses overlap-add to put F0 back where it was and restore the duration.
//! Positive VTL semitones mean a longer tract, so formants move *down*.

mod pitch;
mod psola;

pub use pitch::{estimate_f0, track_f0, F0Estimate, PitchFrame, MAX_F0_HZ, MIN_F0_HZ};
pub use psola::psola;

use thiserror::Error;

use crate::audio::{resample_linear, AudioBuffer, AudioError};

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("no voiced frames found; F0 cannot be estimated")]
    Unvoiced,
    #[error("need at least 100 ms of audio, got {0:.3} s")]
    TooShort(f64),
    #[error("invalid pitch factor {0}")]
    InvalidFactor(f64),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Frequency ratio of a semitone interval.
pub fn semitone_to_ratio(st: f64) -> f64 {
    2f64.powf(st / 12.0)
}

/// Masker voice relative to the target speaker, in semitones.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VoiceCondition {
    pub delta_f0: f64,
    pub delta_vtl: f64,
}

impl VoiceCondition {
    pub const fn new(delta_f0: f64, delta_vtl: f64) -> Self {
        VoiceCondition { delta_f0, delta_vtl }
    }

    /// The four masker voices of the experimental grid.
    pub const EXPERIMENTAL: [VoiceCondition; 4] = [
        VoiceCondition::new(0.0, 0.0),
        VoiceCondition::new(-12.0, 0.0),
        VoiceCondition::new(0.0, 3.8),
        VoiceCondition::new(-12.0, 3.8),
    ];

    /// The nine familiarisation voices (ΔF0 ∈ {0, −6, −12} × ΔVTL ∈ {0, 1.9, 3.8}).
    pub fn training() -> Vec<VoiceCondition> {
        let mut out = Vec::with_capacity(9);
        for f0 in [-12.0, -6.0, 0.0] {
            for vtl in [0.0, 1.9, 3.8] {
                out.push(VoiceCondition::new(f0, vtl));
            }
        }
        out
    }

    pub fn f0_ratio(&self) -> f64 {
        semitone_to_ratio(self.delta_f0)
    }

    /// Factor by which formant frequencies are divided.
    pub fn vtl_ratio(&self) -> f64 {
        semitone_to_ratio(self.delta_vtl)
    }
}

impl std::fmt::Display for VoiceCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ΔF0 {:+} st, ΔVTL {:+} st", self.delta_f0, self.delta_vtl)
    }
}

/// Shift F0 by `st` semitones, keeping duration and spectral envelope.
pub fn shift_f0(buffer: &AudioBuffer, st: f64) -> Result<AudioBuffer, MorphError> {
    psola(buffer, semitone_to_ratio(st), buffer.len())
}

/// Scale the spectral envelope by `1 / 2^(st/12)`, keeping F0 and duration.
pub fn shift_vtl(buffer: &AudioBuffer, st: f64) -> Result<AudioBuffer, MorphError> {
    apply_voice(buffer, VoiceCondition::new(0.0, st))
}

/// Apply both shifts of `voice` in one resynthesis pass. The output has
/// exactly the input's length.
pub fn apply_voice(buffer: &AudioBuffer, voice: VoiceCondition) -> Result<AudioBuffer, MorphError> {
    if voice.delta_vtl == 0.0 {
        return shift_f0(buffer, voice.delta_f0);
    }
    let vtl = voice.vtl_ratio();
    let lowered = resample_linear(buffer, 1.0 / vtl)?;
    psola(&lowered, voice.f0_ratio() * vtl, buffer.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    const FS: u32 = 44_100;

    #[test]
    fn semitone_ratios() {
        assert_eq!(semitone_to_ratio(0.0), 1.0);
        assert!((semitone_to_ratio(-12.0) - 0.5).abs() < 1e-15);
        assert!((semitone_to_ratio(3.8) - 1.2455).abs() < 1e-4);
    }

    #[test]
    fn zero_shift_keeps_f0() {
        let x = synth::pulse_train(242.0, 1.0, FS);
        let y = shift_f0(&x, 0.0).unwrap();
        let (a, b) = (estimate_f0(&x).unwrap().hz, estimate_f0(&y).unwrap().hz);
        assert!((b / a - 1.0).abs() < 0.01);
        assert_eq!(y.len(), x.len());
    }

    #[test]
    fn octave_down_and_half_octave() {
        let x = synth::pulse_train(242.0, 1.0, FS);
        let y = shift_f0(&x, -12.0).unwrap();
        let f = estimate_f0(&y).unwrap().hz;
        assert!((f - 121.0).abs() / 121.0 < 0.03, "{f}");
        let z = shift_f0(&x, -6.0).unwrap();
        let ratio = estimate_f0(&z).unwrap().hz / 242.0;
        assert!((ratio - 0.7071).abs() / 0.7071 < 0.03, "{ratio}");
    }

    #[test]
    fn vtl_keeps_f0_for_grid_values() {
        let x = synth::pulse_train(242.0, 1.0, FS);
        for st in [1.9, 3.8] {
            let y = shift_vtl(&x, st).unwrap();
            let f = estimate_f0(&y).unwrap().hz;
            assert!((f / 242.0 - 1.0).abs() < 0.03, "{st}: {f}");
            assert_eq!(y.len(), x.len());
        }
    }

    fn spectral_peak(buf: &AudioBuffer, lo: f64, hi: f64) -> f64 {
        let spec = crate::spectrum::welch(buf.samples(), buf.sample_rate(), 8192);
        let (bin, _) = spec
            .power
            .iter()
            .enumerate()
            .filter(|(k, _)| (lo..hi).contains(&spec.frequency(*k)))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        spec.frequency(bin)
    }

    #[test]
    fn vtl_moves_formant_down() {
        let x = synth::vowel(100.0, &[(1000.0, 80.0)], 1.0, FS);
        assert!((spectral_peak(&x, 500.0, 1500.0) - 1000.0).abs() < 10.0);
        let y = shift_vtl(&x, 3.8).unwrap();
        let peak = spectral_peak(&y, 500.0, 1500.0);
        let expected = 1000.0 / semitone_to_ratio(3.8);
        assert!((peak - expected).abs() / expected < 0.05, "{peak}");
        let f = estimate_f0(&y).unwrap().hz;
        assert!((f / 100.0 - 1.0).abs() < 0.03, "{f}");
    }

    #[test]
    fn shifts_compose() {
        let x = synth::pulse_train(200.0, 1.0, FS);
        let two_step = shift_f0(&shift_f0(&x, -3.0).unwrap(), -4.0).unwrap();
        let one_step = shift_f0(&x, -7.0).unwrap();
        let (a, b) = (estimate_f0(&two_step).unwrap().hz, estimate_f0(&one_step).unwrap().hz);
        assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
    }

    #[test]
    fn unvoiced_input_is_rejected() {
        let silence = AudioBuffer::silence(FS as usize, FS);
        assert!(matches!(shift_f0(&silence, -12.0), Err(MorphError::Unvoiced)));
    }
}
