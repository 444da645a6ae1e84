use rand::Rng;

use crate::audio::{apply_raised_cosine_ramps, seconds_to_samples, AudioBuffer};

use super::mix::{MASKER_LEAD_SECONDS, MASKER_TAIL_SECONDS};
use super::{CallSign, Sentence, SentenceId, StimulusError};

pub const SEGMENT_MIN_SECONDS: f64 = 0.150;
pub const SEGMENT_MAX_SECONDS: f64 = 0.300;
pub const SEGMENT_RAMP_MS: f64 = 50.0;

/// Where one spliced segment came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentInfo {
    pub source: SentenceId,
    pub start: usize,
    /// Samples drawn from the source.
    pub len: usize,
    /// Samples that survive in the masker (less than `len` only for a tail
    /// segment cut to the exact masker length).
    pub kept: usize,
}

#[derive(Debug, Clone)]
pub struct SplicedMasker {
    pub audio: AudioBuffer,
    pub segments: Vec<SegmentInfo>,
}

/// Build masker speech for a target of `target_len` samples by butt-joining
/// ramped 150-300 ms excerpts of "cat" sentences that share neither keyword
/// with the target. The result covers 750 ms before the target through
/// 250 ms after it.
pub fn splice_masker(
    pool: &[Sentence],
    target: &SentenceId,
    target_len: usize,
    rng: &mut impl Rng,
) -> Result<SplicedMasker, StimulusError> {
    let eligible: Vec<&Sentence> = pool
        .iter()
        .filter(|s| s.id.call_sign == CallSign::Cat && !s.id.shares_keyword_with(target))
        .collect();
    let Some(first) = eligible.first() else {
        return Err(StimulusError::EmptyMaskerPool(*target));
    };
    let fs = first.audio.sample_rate();
    let needed = target_len
        + seconds_to_samples(MASKER_LEAD_SECONDS, fs)
        + seconds_to_samples(MASKER_TAIL_SECONDS, fs);
    let min_len = seconds_to_samples(SEGMENT_MIN_SECONDS, fs);
    let max_len = seconds_to_samples(SEGMENT_MAX_SECONDS, fs);

    let mut samples: Vec<f32> = Vec::with_capacity(needed + max_len);
    let mut segments = Vec::new();
    while samples.len() < needed {
        let len = rng.random_range(min_len..=max_len);
        let long_enough: Vec<&&Sentence> = eligible.iter().filter(|s| s.audio.len() >= len).collect();
        if long_enough.is_empty() {
            return Err(StimulusError::EmptyMaskerPool(*target));
        }
        let source = long_enough[rng.random_range(0..long_enough.len())];
        let start = rng.random_range(0..=source.audio.len() - len);
        let piece = apply_raised_cosine_ramps(&source.audio.slice(start, len), SEGMENT_RAMP_MS)?;
        let kept = len.min(needed - samples.len());
        samples.extend_from_slice(&piece.samples()[..kept]);
        segments.push(SegmentInfo { source: source.id, start, len, kept });
    }
    Ok(SplicedMasker { audio: AudioBuffer::new(samples, fs)?, segments })
}
