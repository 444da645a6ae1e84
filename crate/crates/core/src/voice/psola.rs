//! Time-domain pitch-synchronous overlap-add.
//!
//! Two-period Hann grains are cut around analysis pitch marks and laid down
//! at a new spacing. Grain content (and so the spectral envelope) is kept;
//! only the repetition rate changes. Time scaling falls out of how synthesis
//! marks map back onto analysis marks.

use std::collections::HashMap;

use crate::audio::{seconds_to_samples, AudioBuffer};

use super::pitch::{track_f0, PitchFrame};
use super::MorphError;

/// Mark spacing used through unvoiced stretches.
const UNVOICED_SPACING_SECONDS: f64 = 0.005;

#[derive(Debug, Clone, Copy)]
struct Mark {
    position: usize,
    period: usize,
    voiced: bool,
}

fn smoothed_track(frames: &[PitchFrame]) -> Vec<PitchFrame> {
    // 5-point median over voiced neighbours removes isolated tracking errors.
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let Some(_) = f.f0 else { return *f };
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(frames.len());
            let mut near: Vec<f64> = frames[lo..hi].iter().filter_map(|g| g.f0).collect();
            near.sort_by(f64::total_cmp);
            PitchFrame { center: f.center, f0: Some(near[near.len() / 2]) }
        })
        .collect()
}

fn period_at(frames: &[PitchFrame], position: usize, fs: f64) -> Option<usize> {
    let idx = frames.partition_point(|f| f.center < position);
    let nearest = match (idx.checked_sub(1).map(|i| &frames[i]), frames.get(idx)) {
        (Some(a), Some(b)) => {
            if position - a.center <= b.center - position {
                a
            } else {
                b
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return None,
    };
    nearest.f0.map(|f0| (fs / f0).round() as usize)
}

fn argmax(x: &[f32], lo: usize, hi: usize) -> usize {
    let hi = hi.min(x.len());
    (lo..hi)
        .max_by(|&a, &b| x[a].total_cmp(&x[b]))
        .unwrap_or(lo)
}

fn analysis_marks(buffer: &AudioBuffer) -> Result<Vec<Mark>, MorphError> {
    let frames = smoothed_track(&track_f0(buffer));
    if !frames.iter().any(|f| f.f0.is_some()) {
        return Err(MorphError::Unvoiced);
    }
    let fs = buffer.sample_rate() as f64;
    let x = buffer.samples();
    let unvoiced = seconds_to_samples(UNVOICED_SPACING_SECONDS, buffer.sample_rate()).max(1);
    let mut marks: Vec<Mark> = Vec::new();
    let mut t = 0usize;
    while t < x.len() {
        match period_at(&frames, t, fs) {
            Some(period) => {
                let position = match marks.last() {
                    Some(last) if last.voiced => {
                        let predicted = last.position + period;
                        let radius = period / 4;
                        let found = argmax(x, predicted.saturating_sub(radius), predicted + radius + 1);
                        if found <= last.position { predicted } else { found }
                    }
                    _ => argmax(x, t, t + period),
                };
                if position >= x.len() {
                    break;
                }
                marks.push(Mark { position, period, voiced: true });
                t = position + period;
            }
            None => {
                marks.push(Mark { position: t, period: unvoiced, voiced: false });
                t += unvoiced;
            }
        }
    }
    Ok(marks)
}

/// Hann window over 2·period + 1 samples, zero at both ends.
fn hann_grain(period: usize) -> Vec<f32> {
    let half = period as f64;
    (0..=2 * period)
        .map(|i| (0.5 * (1.0 + (std::f64::consts::PI * (i as f64 - half) / half).cos())) as f32)
        .collect()
}

/// Re-synthesize `buffer` with F0 multiplied by `pitch_factor` and length
/// set to exactly `out_len` samples.
pub fn psola(buffer: &AudioBuffer, pitch_factor: f64, out_len: usize) -> Result<AudioBuffer, MorphError> {
    if !(pitch_factor.is_finite() && pitch_factor > 0.0) {
        return Err(MorphError::InvalidFactor(pitch_factor));
    }
    let marks = analysis_marks(buffer)?;
    let x = buffer.samples();
    let mut out = vec![0.0f32; out_len];
    let time_scale = x.len() as f64 / out_len.max(1) as f64;

    let mut windows: HashMap<usize, Vec<f32>> = HashMap::new();

    let mut synth_pos = marks[0].position as f64 / time_scale;
    while synth_pos < out_len as f64 {
        let analysis_pos = synth_pos * time_scale;
        let idx = marks.partition_point(|m| (m.position as f64) < analysis_pos);
        let mark = match (idx.checked_sub(1).map(|i| marks[i]), marks.get(idx).copied()) {
            (Some(a), Some(b)) => {
                if analysis_pos - a.position as f64 <= b.position as f64 - analysis_pos {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => break,
        };
        let half = mark.period as isize;
        let window = windows.entry(mark.period).or_insert_with(|| hann_grain(mark.period));
        let centre = synth_pos.round() as isize;
        // Clip k so both src and dst stay inside their buffers.
        let k_lo = (-half).max(-(mark.position as isize)).max(-centre);
        let k_hi = half.min(x.len() as isize - 1 - mark.position as isize).min(out_len as isize - 1 - centre);
        for k in k_lo..=k_hi {
            let src = (mark.position as isize + k) as usize;
            let dst = (centre + k) as usize;
            out[dst] += window[(k + half) as usize] * x[src];
        }
        let step = if mark.voiced {
            mark.period as f64 / pitch_factor
        } else {
            mark.period as f64
        };
        synth_pos += step.max(1.0);
    }
    Ok(AudioBuffer::new(out, buffer.sample_rate())?)
}
