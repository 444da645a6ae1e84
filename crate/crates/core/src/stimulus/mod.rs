//! Experimental design and stimulus synthesis: the condition grid, the
//! per-participant trial plan, masker splicing, TMR mixing and corpus
//! pregeneration.

mod corpus;
mod keywords;
mod manifest;
mod masker;
mod mix;

pub use corpus::{Corpus, Sentence};
pub use keywords::{CallSign, Color, Number, SentenceId};
pub use manifest::{
    pregenerate_corpus, render_trial, Manifest, ManifestHeader, RenderOptions, RenderedTrial, MANIFEST_FILE, MANIFEST_SCHEMA,
    MANIFEST_VERSION,
};
pub use masker::{splice_masker, SegmentInfo, SplicedMasker, SEGMENT_MAX_SECONDS, SEGMENT_MIN_SECONDS, SEGMENT_RAMP_MS};
pub use mix::{mix_trial, MixedTrial, MASKER_LEAD_SECONDS, MASKER_TAIL_SECONDS};

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::audio::AudioError;
use crate::voice::{MorphError, VoiceCondition};

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("illegal keyword {0:?}")]
    IllegalKeyword(String),
    #[error("corpus incomplete: {0}")]
    IncompleteCorpus(String),
    #[error("no eligible masker sentence for target {0}")]
    EmptyMaskerPool(SentenceId),
    #[error("masker has {masker} samples, expected {expected}")]
    DurationMismatch { masker: usize, expected: usize },
    #[error("masked trial needs a masker")]
    MissingMasker,
    #[error("{0} input is silent")]
    Silent(&'static str),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Morph(#[from] MorphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Target-to-masker ratio of a trial, or the maskerless baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TmrCondition {
    Masked(f64),
    Baseline,
}

impl TmrCondition {
    pub const EXPERIMENTAL_DB: [f64; 3] = [-6.0, 0.0, 6.0];

    pub fn db(&self) -> Option<f64> {
        match self {
            TmrCondition::Masked(db) => Some(*db),
            TmrCondition::Baseline => None,
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self, TmrCondition::Baseline)
    }
}

impl fmt::Display for TmrCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TmrCondition::Masked(db) => write!(f, "{db}"),
            TmrCondition::Baseline => f.write_str("baseline"),
        }
    }
}

impl std::str::FromStr for TmrCondition {
    type Err = StimulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("baseline") {
            return Ok(TmrCondition::Baseline);
        }
        s.parse::<f64>()
            .map(TmrCondition::Masked)
            .map_err(|_| StimulusError::IllegalKeyword(s.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TmrRepr {
    Db(f64),
    Label(String),
}

impl Serialize for TmrCondition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TmrCondition::Masked(db) => TmrRepr::Db(*db),
            TmrCondition::Baseline => TmrRepr::Label("baseline".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TmrCondition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match TmrRepr::deserialize(d)? {
            TmrRepr::Db(db) => Ok(TmrCondition::Masked(db)),
            TmrRepr::Label(l) => l.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// What a single trial presents: TMR plus masker voice (none for baseline).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialCondition {
    pub tmr: TmrCondition,
    pub voice: Option<VoiceCondition>,
}

impl TrialCondition {
    pub fn masked(tmr_db: f64, voice: VoiceCondition) -> Self {
        TrialCondition { tmr: TmrCondition::Masked(tmr_db), voice: Some(voice) }
    }

    pub fn baseline() -> Self {
        TrialCondition { tmr: TmrCondition::Baseline, voice: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub condition: TrialCondition,
    pub trials: usize,
}

/// The within-subject design: 3 TMRs × 4 voices plus the baseline cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGrid {
    pub cells: Vec<Cell>,
}

pub const TRIALS_PER_CELL: usize = 7;
pub const TRAINING_TRIALS: usize = 4;

impl ConditionGrid {
    pub fn total_trials(&self) -> usize {
        self.cells.iter().map(|c| c.trials).sum()
    }

    pub fn experimental_cells(&self) -> impl Iterator<Item = (usize, &Cell)> {
        self.cells.iter().enumerate().filter(|(_, c)| !c.condition.tmr.is_baseline())
    }

    pub fn cell_index(&self, condition: &TrialCondition) -> Option<usize> {
        self.cells.iter().position(|c| &c.condition == condition)
    }
}

/// TMR-major grid (−6, 0, +6 dB × the four voices) followed by the baseline.
pub fn build_condition_grid() -> ConditionGrid {
    let mut cells: Vec<Cell> = TmrCondition::EXPERIMENTAL_DB
        .iter()
        .flat_map(|&tmr| {
            VoiceCondition::EXPERIMENTAL
                .iter()
                .map(move |&voice| Cell { condition: TrialCondition::masked(tmr, voice), trials: TRIALS_PER_CELL })
        })
        .collect();
    cells.push(Cell { condition: TrialCondition::baseline(), trials: TRIALS_PER_CELL });
    ConditionGrid { cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialPhase {
    Training,
    Experimental,
}

/// One planned stimulus presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    /// 1-based presentation position within its phase.
    pub index: usize,
    pub phase: TrialPhase,
    pub target: SentenceId,
    pub condition: TrialCondition,
    /// Grid cell for experimental trials.
    pub cell: Option<usize>,
    /// Seed of this trial's private random stream.
    pub seed: u64,
    /// Stimulus file relative to the manifest directory, once rendered.
    #[serde(default)]
    pub stimulus: Option<String>,
}

impl TrialSpec {
    /// Random stream for masker construction, separate from the one that
    /// picked the target.
    pub fn masker_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

const STREAM_ORDER: u64 = 1;
const STREAM_TRAINING_PICK: u64 = 2;
const STREAM_TRAINING_TRIAL: u64 = 100;
const STREAM_EXPERIMENTAL_TRIAL: u64 = 1000;

/// Independent sub-seed for stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

fn random_target(rng: &mut impl Rng) -> SentenceId {
    let dogs = SentenceId::all_for(CallSign::Dog);
    dogs[rng.random_range(0..dogs.len())]
}

/// Four of the nine training voices, drawn without replacement; the first
/// two at 0 dB TMR and the rest at +6 dB.
pub fn build_training_set(seed: u64) -> Vec<TrialSpec> {
    let mut voices = VoiceCondition::training();
    let mut pick = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_TRAINING_PICK));
    voices.shuffle(&mut pick);
    voices
        .into_iter()
        .take(TRAINING_TRIALS)
        .enumerate()
        .map(|(i, voice)| {
            let trial_seed = derive_seed(seed, STREAM_TRAINING_TRIAL + i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let tmr = if i < 2 { 0.0 } else { 6.0 };
            TrialSpec {
                index: i + 1,
                phase: TrialPhase::Training,
                target: random_target(&mut rng),
                condition: TrialCondition::masked(tmr, voice),
                cell: None,
                seed: trial_seed,
                stimulus: None,
            }
        })
        .collect()
}

/// The experimental block: every cell's trials in a seed-determined order.
pub fn build_experimental_set(grid: &ConditionGrid, seed: u64) -> Vec<TrialSpec> {
    let mut slots: Vec<usize> = grid
        .cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| std::iter::repeat_n(i, c.trials))
        .collect();
    let mut order = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_ORDER));
    slots.shuffle(&mut order);
    slots
        .into_iter()
        .enumerate()
        .map(|(pos, cell)| {
            let trial_seed = derive_seed(seed, STREAM_EXPERIMENTAL_TRIAL + pos as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            TrialSpec {
                index: pos + 1,
                phase: TrialPhase::Experimental,
                target: random_target(&mut rng),
                condition: grid.cells[cell].condition,
                cell: Some(cell),
                seed: trial_seed,
                stimulus: None,
            }
        })
        .collect()
}
