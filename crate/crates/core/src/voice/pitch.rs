//! Normalized cross-correlation F0 tracking.

use realfft::num_complex::Complex;
use realfft::RealFftPlanner;

use crate::audio::{seconds_to_samples, AudioBuffer};

use super::MorphError;

pub const MIN_F0_HZ: f64 = 60.0;
pub const MAX_F0_HZ: f64 = 500.0;
const FRAME_SECONDS: f64 = 0.025;
const HOP_SECONDS: f64 = 0.010;
const VOICING_THRESHOLD: f64 = 0.45;
/// Frames quieter than this (relative to the loudest frame) are unvoiced.
const SILENCE_DB: f64 = -35.0;
/// A shorter lag wins over the global maximum if it reaches this fraction of
/// it; keeps period doubling out of the estimate.
const FIRST_PEAK_FRACTION: f64 = 0.85;
/// Rates at or above this are tracked at half rate; F0 needs no more.
const DECIMATE_ABOVE_HZ: u32 = 32_000;

/// Summary pitch of a buffer.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct F0Estimate {
    pub hz: f64,
    pub voiced_fraction: f64,
}

/// One analysis frame of the pitch track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchFrame {
    /// Sample index of the frame centre.
    pub center: usize,
    /// `None` when the frame is unvoiced.
    pub f0: Option<f64>,
}

/// Frame-by-frame F0 track: 25 ms frames, 10 ms hop, 60-500 Hz search.
pub fn track_f0(buffer: &AudioBuffer) -> Vec<PitchFrame> {
    let rate = buffer.sample_rate();
    if rate < DECIMATE_ABOVE_HZ {
        return track(buffer.samples(), rate, 1);
    }
    // [1 2 1]/4 smoothing, then every second sample.
    let x = buffer.samples();
    let half: Vec<f32> = (0..x.len() / 2)
        .map(|i| {
            let c = 2 * i;
            let prev = if c > 0 { x[c - 1] } else { x[c] };
            0.25 * prev + 0.5 * x[c] + 0.25 * x[c + 1]
        })
        .collect();
    track(&half, rate / 2, 2)
}

/// Track `x` sampled at `rate`; frame centres are reported on a grid `step`
/// times finer.
fn track(x: &[f32], rate: u32, step: usize) -> Vec<PitchFrame> {
    let fs = rate as f64;
    let frame = seconds_to_samples(FRAME_SECONDS, rate).max(2);
    let hop = seconds_to_samples(HOP_SECONDS, rate).max(1);
    let min_lag = (fs / MAX_F0_HZ).floor().max(2.0) as usize;
    let max_lag = (fs / MIN_F0_HZ).ceil() as usize;
    if x.len() < frame + max_lag + 1 {
        return Vec::new();
    }

    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0f64);
    for &s in x {
        let last = *prefix.last().unwrap();
        prefix.push(last + (s as f64) * (s as f64));
    }
    let energy = |start: usize, len: usize| prefix[start + len] - prefix[start];

    let size = (frame + max_lag + 1).next_power_of_two();
    let mut planner = RealFftPlanner::<f32>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let mut a_in = forward.make_input_vec();
    let mut b_in = forward.make_input_vec();
    let mut a = forward.make_output_vec();
    let mut b = forward.make_output_vec();
    let mut corr = inverse.make_output_vec();

    let starts: Vec<usize> = (0..)
        .map(|i| i * hop)
        .take_while(|&s| s + frame + max_lag < x.len())
        .collect();
    let loudest = starts.iter().map(|&s| energy(s, frame)).fold(0.0, f64::max);
    let floor = loudest * 10f64.powf(SILENCE_DB / 10.0);

    let mut frames = Vec::with_capacity(starts.len());
    for &s in &starts {
        let center = (s + frame / 2) * step;
        let e0 = energy(s, frame);
        if e0 <= floor || e0 == 0.0 {
            frames.push(PitchFrame { center, f0: None });
            continue;
        }
        a_in.fill(0.0);
        a_in[..frame].copy_from_slice(&x[s..s + frame]);
        b_in.fill(0.0);
        b_in[..frame + max_lag + 1].copy_from_slice(&x[s..s + frame + max_lag + 1]);
        // Lengths always match the plan, so these cannot fail.
        forward.process(&mut a_in, &mut a).expect("planned length");
        forward.process(&mut b_in, &mut b).expect("planned length");
        for (ai, bi) in a.iter_mut().zip(&b) {
            *ai = ai.conj() * bi;
        }
        for end in [0, a.len() - 1] {
            a[end] = Complex::new(a[end].re, 0.0);
        }
        inverse.process(&mut a, &mut corr).expect("planned length");
        let nccf = |lag: usize| {
            let denom = (e0 * energy(s + lag, frame)).sqrt();
            if denom > 0.0 {
                corr[lag] as f64 / size as f64 / denom
            } else {
                0.0
            }
        };
        let values: Vec<f64> = (min_lag..=max_lag + 1).map(nccf).collect();
        let at = |lag: usize| values[lag - min_lag];
        let global = (min_lag..=max_lag).map(at).fold(f64::MIN, f64::max);
        if global < VOICING_THRESHOLD {
            frames.push(PitchFrame { center, f0: None });
            continue;
        }
        let is_peak = |lag: usize| {
            let left = if lag > min_lag { at(lag - 1) } else { f64::MIN };
            at(lag) >= left && at(lag) >= at(lag + 1)
        };
        let chosen = (min_lag..=max_lag)
            .find(|&lag| at(lag) >= FIRST_PEAK_FRACTION * global && is_peak(lag))
            .unwrap_or(max_lag);
        let lag = refine(chosen, &at, min_lag, max_lag);
        frames.push(PitchFrame { center, f0: Some(fs / lag) });
    }
    frames
}

fn refine(lag: usize, at: &impl Fn(usize) -> f64, min_lag: usize, max_lag: usize) -> f64 {
    if lag <= min_lag || lag >= max_lag {
        return lag as f64;
    }
    let (l, c, r) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-12 {
        lag as f64
    } else {
        lag as f64 + (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    }
}

/// Median F0 over voiced frames.
pub fn estimate_f0(buffer: &AudioBuffer) -> Result<F0Estimate, MorphError> {
    if buffer.duration_seconds() < 0.1 {
        return Err(MorphError::TooShort(buffer.duration_seconds()));
    }
    let frames = track_f0(buffer);
    let mut voiced: Vec<f64> = frames.iter().filter_map(|f| f.f0).collect();
    if voiced.is_empty() {
        return Err(MorphError::Unvoiced);
    }
    voiced.sort_by(f64::total_cmp);
    let mid = voiced.len() / 2;
    let hz = if voiced.len() % 2 == 1 {
        voiced[mid]
    } else {
        0.5 * (voiced[mid - 1] + voiced[mid])
    };
    Ok(F0Estimate {
        hz,
        voiced_fraction: voiced.len() as f64 / frames.len() as f64,
    })
}
