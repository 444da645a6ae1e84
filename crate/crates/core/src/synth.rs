//! Synthetic voiced signals: band-limited pulse trains, steady vowels and a
//! small source-filter talker that renders CRM-shaped utterances. Used to
//! build stand-in corpora when no recordings are available, and as known
//! inputs for verifying the voice tools.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{seconds_to_samples, AudioBuffer};

/// Highest harmonic frequency rendered by the additive generators.
const HARMONIC_CEILING_HZ: f64 = 5000.0;

fn additive(f0: f64, seconds: f64, sample_rate: u32, weight: impl Fn(f64) -> f64) -> AudioBuffer {
    let fs = sample_rate as f64;
    let n = seconds_to_samples(seconds, sample_rate);
    let top = HARMONIC_CEILING_HZ.min(0.45 * fs);
    let harmonics: Vec<(f64, f64)> = (1..)
        .map(|h| h as f64 * f0)
        .take_while(|&f| f <= top)
        .map(|f| (f, weight(f)))
        .collect();
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            harmonics.iter().map(|&(f, a)| a * (2.0 * PI * f * t).cos()).sum()
        })
        .collect();
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    AudioBuffer::new(x.into_iter().map(|v| v as f32).collect(), sample_rate)
        .expect("positive sample rate")
}

/// Equal-amplitude cosine harmonics of `f0` up to 5 kHz, peak 0.5.
pub fn pulse_train(f0: f64, seconds: f64, sample_rate: u32) -> AudioBuffer {
    additive(f0, seconds, sample_rate, |_| 1.0)
}

/// Magnitude of a second-order resonance at `freq` with bandwidth `bw`.
pub fn resonance_gain(f: f64, freq: f64, bw: f64) -> f64 {
    freq * freq / ((freq * freq - f * f).powi(2) + (bw * f).powi(2)).sqrt()
}

/// Harmonics of `f0` shaped by the given (frequency, bandwidth) resonances.
pub fn vowel(f0: f64, formants: &[(f64, f64)], seconds: f64, sample_rate: u32) -> AudioBuffer {
    additive(f0, seconds, sample_rate, |f| {
        formants.iter().map(|&(freq, bw)| resonance_gain(f, freq, bw)).product()
    })
}

/// Two-pole digital resonator with unity gain at DC.
#[derive(Debug, Clone, Copy)]
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let c = -(-2.0 * PI * bw / fs).exp();
        let b = 2.0 * (-PI * bw / fs).exp() * (2.0 * PI * freq / fs).cos();
        Resonator { a: 1.0 - b - c, b, c, y1: 0.0, y2: 0.0 }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// First three formants of a few English vowels, in Hz.
pub const VOWELS: [[f64; 3]; 8] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
    [660.0, 1720.0, 2410.0],
    [390.0, 1990.0, 2550.0],
    [520.0, 1190.0, 2390.0],
];

/// One voiced syllable followed by a consonant-like noise gap.
#[derive(Debug, Clone, Copy)]
pub struct Syllable {
    pub formants: [f64; 3],
    pub voiced_seconds: f64,
    pub gap_seconds: f64,
}

/// Render syllables with an impulse-train source and cascaded formant
/// resonators. F0 declines 4 % across the utterance. Output RMS is −20 dB FS.
pub fn utterance(syllables: &[Syllable], f0: f64, seed: u64, sample_rate: u32) -> AudioBuffer {
    let fs = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = syllables.iter().map(|s| s.voiced_seconds + s.gap_seconds).sum();
    let ramp = seconds_to_samples(0.02, sample_rate);
    let mut out = Vec::with_capacity(seconds_to_samples(total, sample_rate) + 1);
    let mut phase = 0.0f64;
    let mut tilt = 0.0f64;
    for syl in syllables {
        let mut filters: Vec<Resonator> = syl
            .formants
            .iter()
            .zip([80.0, 100.0, 150.0])
            .map(|(&f, bw)| Resonator::new(f, bw, fs))
            .collect();
        let wobble = 1.0 + rng.random_range(-0.01..0.01);
        let voiced = seconds_to_samples(syl.voiced_seconds, sample_rate);
        for i in 0..voiced {
            let t = out.len() as f64 / fs;
            let f = f0 * wobble * (1.02 - 0.04 * t / total);
            phase += f / fs;
            let pulse = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            tilt = pulse + 0.8 * tilt;
            let mut y = tilt;
            for r in &mut filters {
                y = r.tick(y);
            }
            let env = if i < ramp {
                0.5 * (1.0 - (PI * i as f64 / ramp as f64).cos())
            } else if voiced - i <= ramp {
                0.5 * (1.0 - (PI * (voiced - i) as f64 / ramp as f64).cos())
            } else {
                1.0
            };
            out.push(y * env);
        }
        let gap = seconds_to_samples(syl.gap_seconds, sample_rate);
        out.extend((0..gap).map(|_| rng.random_range(-1.0..1.0) * 0.002));
    }
    let ms = out.iter().map(|v| v * v).sum::<f64>() / out.len().max(1) as f64;
    let gain = if ms > 0.0 { 0.1 / ms.sqrt() } else { 0.0 };
    AudioBuffer::new(out.into_iter().map(|v| (v * gain) as f32).collect(), sample_rate)
        .expect("positive sample rate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::rms_level_db;

    #[test]
    fn utterance_level_and_length() {
        let syl = Syllable { formants: VOWELS[0], voiced_seconds: 0.2, gap_seconds: 0.05 };
        let u = utterance(&[syl; 4], 242.0, 1, 44_100);
        assert!((u.duration_seconds() - 1.0).abs() < 0.01);
        assert!((rms_level_db(&u).unwrap().db() + 20.0).abs() < 1e-3);
        assert!(u.peak() < 1.0);
    }

    #[test]
    fn vowel_peaks_at_formant_harmonic() {
        let v = vowel(100.0, &[(1000.0, 80.0)], 0.5, 44_100);
        let spec = crate::spectrum::welch(v.samples(), 44_100, 8192);
        let peak = spec.power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((spec.frequency(peak) - 1000.0).abs() < 10.0);
    }
}
