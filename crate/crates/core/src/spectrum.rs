//! FFT-based power spectra shared by calibration and the voice tools.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// One-sided power spectrum averaged over Hann-windowed frames.
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    /// Power per bin; the bins sum to the signal's mean square.
    pub power: Vec<f64>,
    pub bin_hz: f64,
}

impl PowerSpectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }

    /// Sum of bin powers with centre frequency in `[lo, hi)`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.power
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = self.frequency(*k);
                f >= lo && f < hi
            })
            .map(|(_, p)| p)
            .sum()
    }
}

pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch estimate with `frame`-sample Hann windows and 50 % overlap.
/// Signals shorter than one frame are zero-padded into a single frame.
pub fn welch(samples: &[f32], sample_rate: u32, frame: usize) -> PowerSpectrum {
    let window = hann(frame);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame);
    let hop = frame / 2;
    let bins = frame / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut frames = 0usize;
    let mut start = 0usize;
    let mut scratch = vec![Complex::new(0.0, 0.0); frame];
    loop {
        for (n, slot) in scratch.iter_mut().enumerate() {
            let x = samples.get(start + n).copied().unwrap_or(0.0) as f64;
            *slot = Complex::new(x * window[n], 0.0);
        }
        fft.process(&mut scratch);
        for (k, a) in acc.iter_mut().enumerate() {
            let p = scratch[k].norm_sqr() / (frame as f64 * window_energy);
            let one_sided = if k == 0 || (frame % 2 == 0 && k == frame / 2) { p } else { 2.0 * p };
            *a += one_sided;
        }
        frames += 1;
        start += hop;
        if start + frame > samples.len() {
            break;
        }
    }
    for a in &mut acc {
        *a /= frames as f64;
    }
    PowerSpectrum { power: acc, bin_hz: sample_rate as f64 / frame as f64 }
}
