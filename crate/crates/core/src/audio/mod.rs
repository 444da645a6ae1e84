//! Mono audio buffers and the level, ramp and resampling primitives every
//! other module builds on.

mod wav;

pub use wav::{read_wav, read_wav_from, wav_bytes, write_wav, write_wav_to};

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Sample rate used for every generated stimulus.
pub const CANONICAL_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("buffer is empty")]
    Empty,
    #[error("buffer is silent (zero RMS)")]
    Silent,
    #[error("buffer of {len} samples is shorter than two {ramp} sample ramps")]
    TooShortForRamps { len: usize, ramp: usize },
    #[error("resampling ratio {0} outside [0.25, 4.0]")]
    RatioOutOfRange(f64),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("cannot compare a {0} level with a {1} level without a calibration offset")]
    ReferenceMismatch(LevelRef, LevelRef),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("WAV decode failed: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A mono sequence of samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        Ok(AudioBuffer { samples, sample_rate })
    }

    /// A buffer of `len` zeros.
    pub fn silence(len: usize, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        AudioBuffer { samples: vec![0.0; len], sample_rate }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Number of samples closest to `seconds` at this buffer's rate.
    pub fn samples_for(&self, seconds: f64) -> usize {
        seconds_to_samples(seconds, self.sample_rate)
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Multiply every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer {
            samples: self.samples.iter().map(|&s| (s as f64 * gain) as f32).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn mean_square(&self) -> Result<f64, AudioError> {
        if self.samples.is_empty() {
            return Err(AudioError::Empty);
        }
        let sum: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        Ok(sum / self.samples.len() as f64)
    }

    pub fn rms(&self) -> Result<f64, AudioError> {
        self.mean_square().map(f64::sqrt)
    }

    /// Copy of `range` as a new buffer.
    pub fn slice(&self, start: usize, len: usize) -> AudioBuffer {
        AudioBuffer {
            samples: self.samples[start..start + len].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

pub fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64).round().max(0.0) as usize
}

/// Which zero point a decibel value is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LevelRef {
    /// Relative to a full-scale (RMS 1.0) signal.
    FullScale,
    /// Sound pressure level, only ever obtained through a calibration offset.
    SoundPressure,
}

impl fmt::Display for LevelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelRef::FullScale => f.write_str("dB FS"),
            LevelRef::SoundPressure => f.write_str("dB SPL"),
        }
    }
}

/// A decibel value tagged with its reference.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LevelDb {
    value: f64,
    reference: LevelRef,
}

impl LevelDb {
    pub fn fs(value: f64) -> Self {
        LevelDb { value, reference: LevelRef::FullScale }
    }

    pub fn spl(value: f64) -> Self {
        LevelDb { value, reference: LevelRef::SoundPressure }
    }

    pub fn db(&self) -> f64 {
        self.value
    }

    pub fn reference(&self) -> LevelRef {
        self.reference
    }

    pub fn is_silent(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }

    /// Convert a full-scale level to nominal SPL using `offset_db`
    /// (SPL = FS + offset). SPL levels pass through unchanged.
    pub fn to_spl(self, offset_db: f64) -> LevelDb {
        match self.reference {
            LevelRef::FullScale => LevelDb::spl(self.value + offset_db),
            LevelRef::SoundPressure => self,
        }
    }

    /// `self - other` in dB; both must share a reference.
    pub fn difference(self, other: LevelDb) -> Result<f64, AudioError> {
        if self.reference != other.reference {
            return Err(AudioError::ReferenceMismatch(self.reference, other.reference));
        }
        Ok(self.value - other.value)
    }
}

impl fmt::Display for LevelDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} {}", self.value, self.reference)
    }
}

pub fn amplitude_to_db(amplitude: f64) -> f64 {
    if amplitude <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * amplitude.log10()
    }
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// RMS level in dB FS. A silent buffer yields negative infinity.
pub fn rms_level_db(buffer: &AudioBuffer) -> Result<LevelDb, AudioError> {
    Ok(LevelDb::fs(amplitude_to_db(buffer.rms()?)))
}

/// Raised-cosine fade-in and fade-out of `ramp_ms` each.
pub fn apply_raised_cosine_ramps(buffer: &AudioBuffer, ramp_ms: f64) -> Result<AudioBuffer, AudioError> {
    let ramp = seconds_to_samples(ramp_ms / 1000.0, buffer.sample_rate);
    let len = buffer.len();
    if len < 2 * ramp {
        return Err(AudioError::TooShortForRamps { len, ramp });
    }
    let mut out = buffer.clone();
    for i in 0..ramp {
        let gain = (0.5 * (1.0 - (PI * i as f64 / ramp as f64).cos())) as f32;
        out.samples[i] *= gain;
        out.samples[len - 1 - i] *= gain;
    }
    Ok(out)
}

/// Gain that brings `buffer` to `target` RMS.
pub fn gain_for_rms(buffer: &AudioBuffer, target: LevelDb) -> Result<f64, AudioError> {
    if target.reference() != LevelRef::FullScale {
        return Err(AudioError::ReferenceMismatch(LevelRef::FullScale, target.reference()));
    }
    let rms = buffer.rms()?;
    if rms == 0.0 {
        return Err(AudioError::Silent);
    }
    Ok(db_to_amplitude(target.db()) / rms)
}

/// Pure gain so the output RMS equals `target`.
pub fn scale_to_rms(buffer: &AudioBuffer, target: LevelDb) -> Result<AudioBuffer, AudioError> {
    let gain = gain_for_rms(buffer, target)?;
    Ok(buffer.scaled(gain))
}

/// Linear-interpolation resampling that keeps the nominal sample rate:
/// output sample `j` reads input position `j * ratio`, so playing the result
/// at the original rate multiplies every frequency by `ratio` and divides the
/// duration by it.
pub fn resample_linear(buffer: &AudioBuffer, ratio: f64) -> Result<AudioBuffer, AudioError> {
    if !(0.25..=4.0).contains(&ratio) || !ratio.is_finite() {
        return Err(AudioError::RatioOutOfRange(ratio));
    }
    let input = &buffer.samples;
    let out_len = (input.len() as f64 / ratio).round() as usize;
    if input.is_empty() {
        return Ok(buffer.clone());
    }
    let last = input.len() - 1;
    let samples = (0..out_len)
        .map(|j| {
            let pos = j as f64 * ratio;
            let i = pos.floor() as usize;
            if i >= last {
                return input[last];
            }
            let frac = (pos - i as f64) as f32;
            input[i] + (input[i + 1] - input[i]) * frac
        })
        .collect();
    Ok(AudioBuffer { samples, sample_rate: buffer.sample_rate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, amp: f64, seconds: f64, fs: u32) -> AudioBuffer {
        let n = seconds_to_samples(seconds, fs);
        let samples = (0..n)
            .map(|i| (amp * (2.0 * PI * freq * i as f64 / fs as f64).sin()) as f32)
            .collect();
        AudioBuffer::new(samples, fs).unwrap()
    }

    /// Brute-force DFT magnitude scan, independent of any FFT library.
    fn dominant_frequency(buf: &AudioBuffer, lo: f64, hi: f64, step: f64) -> f64 {
        let fs = buf.sample_rate() as f64;
        let mut best = (lo, 0.0);
        let mut f = lo;
        while f <= hi {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, &s) in buf.samples().iter().enumerate() {
                let ph = 2.0 * PI * f * n as f64 / fs;
                re += s as f64 * ph.cos();
                im += s as f64 * ph.sin();
            }
            let mag = re * re + im * im;
            if mag > best.1 {
                best = (f, mag);
            }
            f += step;
        }
        best.0
    }

    #[test]
    fn rms_of_constants_and_sine() {
        let ones = AudioBuffer::new(vec![1.0; 100], 8000).unwrap();
        assert!(rms_level_db(&ones).unwrap().db().abs() < 1e-12);
        let half = AudioBuffer::new(vec![0.5; 100], 8000).unwrap();
        assert!((rms_level_db(&half).unwrap().db() - 20.0 * 0.5f64.log10()).abs() < 1e-9);
        assert!((rms_level_db(&half).unwrap().db() + 6.0206).abs() < 1e-4);
        let s = sine(1000.0, 1.0, 1.0, 44_100);
        assert!((rms_level_db(&s).unwrap().db() + 3.0103).abs() < 1e-3);
    }

    #[test]
    fn rms_of_silence_is_sentinel_and_empty_errors() {
        let silent = AudioBuffer::silence(10, 8000);
        assert!(rms_level_db(&silent).unwrap().is_silent());
        let empty = AudioBuffer::silence(0, 8000);
        assert!(matches!(rms_level_db(&empty), Err(AudioError::Empty)));
    }

    #[test]
    fn ramp_shape() {
        let fs = 44_100;
        let buf = AudioBuffer::new(vec![1.0; fs as usize], fs).unwrap();
        let out = apply_raised_cosine_ramps(&buf, 50.0).unwrap();
        let ramp = seconds_to_samples(0.05, fs);
        assert_eq!(out.samples()[0], 0.0);
        assert_eq!(*out.samples().last().unwrap(), 0.0);
        assert!((out.samples()[ramp / 2] - 0.5).abs() < 1e-3);
        assert_eq!(out.samples()[fs as usize / 2], 1.0);
        let energy: f64 = out.samples()[..ramp].iter().map(|&s| (s as f64).powi(2)).sum();
        assert!((energy / ramp as f64 - 3.0 / 8.0).abs() < 1e-3);
    }

    #[test]
    fn ramp_rejects_short_buffers() {
        let buf = AudioBuffer::new(vec![1.0; 99], 1000).unwrap();
        assert!(matches!(
            apply_raised_cosine_ramps(&buf, 50.0),
            Err(AudioError::TooShortForRamps { .. })
        ));
    }

    #[test]
    fn scale_to_rms_gain() {
        let buf = AudioBuffer::new(vec![db_to_amplitude(-12.0) as f32; 50], 8000).unwrap();
        let gain = gain_for_rms(&buf, LevelDb::fs(-6.0)).unwrap();
        assert!((gain - 10f64.powf(6.0 / 20.0)).abs() < 1e-6);
        let same = scale_to_rms(&buf, rms_level_db(&buf).unwrap()).unwrap();
        for (a, b) in same.samples().iter().zip(buf.samples()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(
            scale_to_rms(&AudioBuffer::silence(5, 8000), LevelDb::fs(-6.0)),
            Err(AudioError::Silent)
        ));
    }

    #[test]
    fn spl_and_fs_do_not_mix() {
        let a = LevelDb::fs(-20.0);
        let b = LevelDb::spl(65.0);
        assert!(a.difference(b).is_err());
        assert_eq!(a.to_spl(85.0).difference(b).unwrap(), 0.0);
    }

    #[test]
    fn resample_identity_and_length() {
        let s = sine(440.0, 0.5, 0.1, 8000);
        assert_eq!(resample_linear(&s, 1.0).unwrap(), s);
        let half = resample_linear(&s, 0.5).unwrap();
        assert!((half.len() as i64 - 2 * s.len() as i64).abs() <= 1);
        assert!(matches!(resample_linear(&s, 5.0), Err(AudioError::RatioOutOfRange(_))));
        assert!(matches!(resample_linear(&s, 0.2), Err(AudioError::RatioOutOfRange(_))));
    }

    #[test]
    fn resample_doubles_frequency() {
        let s = sine(440.0, 0.5, 0.25, 16_000);
        let up = resample_linear(&s, 2.0).unwrap();
        let f = dominant_frequency(&up, 700.0, 1000.0, 1.0);
        assert!((f - 880.0).abs() / 880.0 < 0.01, "peak at {f}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn buffer_strategy() -> impl Strategy<Value = AudioBuffer> {
            prop::collection::vec(-1.0f32..1.0, 400..2000)
                .prop_map(|v| AudioBuffer::new(v, 8000).unwrap())
        }

        proptest! {
            #[test]
            fn ramps_never_raise_peak(buf in buffer_strategy()) {
                let out = apply_raised_cosine_ramps(&buf, 20.0).unwrap();
                prop_assert!(out.peak() <= buf.peak());
            }

            #[test]
            fn scale_is_idempotent(buf in buffer_strategy(), target in -40.0f64..-3.0) {
                prop_assume!(buf.rms().unwrap() > 1e-3);
                let once = scale_to_rms(&buf, LevelDb::fs(target)).unwrap();
                prop_assert!((rms_level_db(&once).unwrap().db() - target).abs() < 0.01);
                let twice = scale_to_rms(&once, LevelDb::fs(target)).unwrap();
                for (a, b) in once.samples().iter().zip(twice.samples()) {
                    prop_assert!((a - b).abs() < 1e-6);
                }
            }

            #[test]
            fn resample_round_trip_keeps_duration(buf in buffer_strategy(), ratio in 0.25f64..4.0) {
                let there = resample_linear(&buf, ratio).unwrap();
                prop_assume!(!there.is_empty());
                let back = resample_linear(&there, 1.0 / ratio).unwrap();
                prop_assert!((back.len() as i64 - buf.len() as i64).abs() <= 2);
            }
        }
    }
}
