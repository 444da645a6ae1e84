//! Statistics for the study: repeated-measures ANOVA with sphericity
//! handling, BIC Bayes factors, t-tests, ICC(2,k), NARS scoring,
//! backchannel tallies and the feedback-time bootstrap.

mod anova;
mod backchannel;
mod bayes;
mod bootstrap;
mod icc;
mod nars;
pub mod special;
mod table;
mod ttest;

pub use anova::{gg_epsilon, mauchly, rm_anova, AnovaTable, EffectResult, Factor, Mauchly, RmDataset, SPHERICITY_ALPHA};
pub use backchannel::{backchannel_tally, read_coded_behaviours, Behavior, BackchannelTable, CodedBehavior};
pub use bayes::{bic_bayes_factor, effect_bayes_factor, BayesFactor, Direction, Evidence, Strength};
pub use bootstrap::{bootstrap_feedback_duration, BootstrapResult};
pub use icc::{icc_2k, IccResult};
pub use nars::{nars_score, nars_table, NarsRow, NarsScore, NARS_ITEMS};
pub use table::{
    dataset_from_rows, duration_pairs, intelligibility_series, read_metrics_csv, write_anova_csv, write_ttest_csv,
    SeriesPoint,
};
pub use ttest::{one_sample_t, one_sample_t_values, paired_t, Summary, TTest};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} {what}, got {got}")]
    TooFew { what: &'static str, needed: usize, got: usize },
    #[error("samples have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance: the statistic is undefined")]
    ZeroVariance,
    #[error("missing cell: {0}")]
    MissingCell(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unknown behaviour {0:?}")]
    UnknownBehavior(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
