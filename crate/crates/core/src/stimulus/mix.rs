use log::warn;

use crate::audio::{db_to_amplitude, gain_for_rms, seconds_to_samples, AudioBuffer, LevelDb};

use super::{StimulusError, TmrCondition};

/// Masker onset precedes the target by this much.
pub const MASKER_LEAD_SECONDS: f64 = 0.750;
/// Masker continues this long after the target ends.
pub const MASKER_TAIL_SECONDS: f64 = 0.250;

/// Output peak allowed before the whole mix is attenuated.
const PEAK_LIMIT: f32 = 1.0;

#[derive(Debug, Clone)]
pub struct MixedTrial {
    pub audio: AudioBuffer,
    /// Gain applied to the target in the final mix.
    pub target_gain: f64,
    /// Gain applied to the masker in the final mix (`None` for baseline).
    pub masker_gain: Option<f64>,
    /// Extra attenuation applied to avoid clipping, in dB (0 when none).
    pub overflow_attenuation_db: f64,
}

/// Mix target and masker at `tmr` (RMS-based) and set the overall RMS to
/// `presentation_level`. Baseline trials ignore the masker and return the
/// target alone at that level.
pub fn mix_trial(
    target: &AudioBuffer,
    masker: Option<&AudioBuffer>,
    tmr: TmrCondition,
    presentation_level: LevelDb,
) -> Result<MixedTrial, StimulusError> {
    let target_rms = target.rms()?;
    if target_rms == 0.0 {
        return Err(StimulusError::Silent("target"));
    }
    let (mut mix, mut target_gain, mut masker_gain) = match tmr {
        TmrCondition::Baseline => (target.clone(), 1.0, None),
        TmrCondition::Masked(tmr_db) => {
            let masker = masker.ok_or(StimulusError::MissingMasker)?;
            let fs = target.sample_rate();
            let lead = seconds_to_samples(MASKER_LEAD_SECONDS, fs);
            let expected = target.len() + lead + seconds_to_samples(MASKER_TAIL_SECONDS, fs);
            if masker.len() != expected {
                return Err(StimulusError::DurationMismatch { masker: masker.len(), expected });
            }
            let masker_rms = masker.rms()?;
            if masker_rms == 0.0 {
                return Err(StimulusError::Silent("masker"));
            }
            let gain = target_rms / (masker_rms * db_to_amplitude(tmr_db));
            let mut mix = masker.scaled(gain);
            for (out, &t) in mix.samples_mut()[lead..].iter_mut().zip(target.samples()) {
                *out += t;
            }
            (mix, 1.0, Some(gain))
        }
    };

    let level_gain = gain_for_rms(&mix, presentation_level)?;
    mix = mix.scaled(level_gain);
    target_gain *= level_gain;
    masker_gain = masker_gain.map(|g| g * level_gain);

    let peak = mix.peak();
    let mut overflow_attenuation_db = 0.0;
    if peak > PEAK_LIMIT {
        let fix = (PEAK_LIMIT / peak) as f64 * 0.999;
        overflow_attenuation_db = -20.0 * fix.log10();
        warn!("mix peak {peak:.3} exceeds full scale; attenuating by {overflow_attenuation_db:.2} dB");
        mix = mix.scaled(fix);
        target_gain *= fix;
        masker_gain = masker_gain.map(|g| g * fix);
    }
    Ok(MixedTrial { audio: mix, target_gain, masker_gain, overflow_attenuation_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::rms_level_db;
    use crate::synth;

    fn pair() -> (AudioBuffer, AudioBuffer) {
        let target = synth::pulse_train(242.0, 1.0, 16_000);
        let masker = synth::pulse_train(121.0, 2.0, 16_000).scaled(0.3);
        (target, masker)
    }

    fn component_difference(target: &AudioBuffer, masker: &AudioBuffer, mixed: &MixedTrial) -> f64 {
        let t = rms_level_db(&target.scaled(mixed.target_gain)).unwrap();
        let m = rms_level_db(&masker.scaled(mixed.masker_gain.unwrap())).unwrap();
        t.difference(m).unwrap()
    }

    #[test]
    fn tmr_sets_component_levels() {
        let (target, masker) = pair();
        for tmr in [-6.0, 0.0, 6.0] {
            let mixed = mix_trial(&target, Some(&masker), TmrCondition::Masked(tmr), LevelDb::fs(-20.0)).unwrap();
            assert!((component_difference(&target, &masker, &mixed) - tmr).abs() < 0.1);
            assert!((rms_level_db(&mixed.audio).unwrap().db() + 20.0).abs() < 0.01);
            assert_eq!(mixed.audio.len(), masker.len());
        }
        let mixed = mix_trial(&target, Some(&masker), TmrCondition::Masked(6.0), LevelDb::fs(-20.0)).unwrap();
        let ratio = mixed.target_gain * target.rms().unwrap() / (mixed.masker_gain.unwrap() * masker.rms().unwrap());
        assert!((ratio - 1.9953).abs() / 1.9953 < 0.01);
    }

    #[test]
    fn baseline_is_scaled_target() {
        let (target, masker) = pair();
        let mixed = mix_trial(&target, Some(&masker), TmrCondition::Baseline, LevelDb::fs(-20.0)).unwrap();
        let gain = gain_for_rms(&target, LevelDb::fs(-20.0)).unwrap();
        assert_eq!(mixed.audio, target.scaled(gain));
        assert!(mixed.masker_gain.is_none());
    }

    #[test]
    fn target_starts_after_lead() {
        let (target, masker) = pair();
        let silent_masker = AudioBuffer::new(vec![1e-6; masker.len()], 16_000).unwrap();
        let mixed = mix_trial(&target, Some(&silent_masker), TmrCondition::Masked(60.0), LevelDb::fs(-20.0)).unwrap();
        let lead = seconds_to_samples(MASKER_LEAD_SECONDS, 16_000);
        let early = mixed.audio.samples()[..lead].iter().fold(0.0f32, |m, s| m.max(s.abs()));
        assert!(early < 1e-3);
        assert!((mixed.audio.samples()[lead] as f64 - target.samples()[0] as f64 * mixed.target_gain).abs() < 1e-3);
    }

    #[test]
    fn overflow_is_attenuated_not_clipped() {
        let (target, masker) = pair();
        let mixed = mix_trial(&target, Some(&masker), TmrCondition::Masked(0.0), LevelDb::fs(0.0)).unwrap();
        assert!(mixed.audio.peak() <= 1.0);
        assert!(mixed.overflow_attenuation_db > 0.0);
        assert!((component_difference(&target, &masker, &mixed) - 0.0).abs() < 0.1);
    }

    #[test]
    fn mismatched_and_silent_inputs() {
        let (target, _) = pair();
        let short = AudioBuffer::silence(100, 16_000);
        assert!(matches!(
            mix_trial(&target, Some(&short), TmrCondition::Masked(0.0), LevelDb::fs(-20.0)),
            Err(StimulusError::DurationMismatch { .. })
        ));
        let silent = AudioBuffer::silence(target.len() + 16_000, 16_000);
        assert!(matches!(
            mix_trial(&target, Some(&silent), TmrCondition::Masked(0.0), LevelDb::fs(-20.0)),
            Err(StimulusError::Silent("masker"))
        ));
    }
}
