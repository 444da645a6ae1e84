//! Experiment session engine.
//!
//! A session is an append-only sequence of [`EventRecord`]s. [`SessionState`]
//! changes only through [`SessionState::apply`], so the state after any
//! prefix of the log is a left fold over it; the live engine and a replay
//! of the persisted log cannot diverge.

mod agent;
mod engine;
mod events;
mod log;
mod metrics;
mod simulate;
mod state;

pub use agent::{AgentAction, AgentAdapter, EyeColor, LoggingAgent, SimulatedAgent};
pub use engine::{BreakProgress, NextHint, NextStep, ResponseInput, Session, SubmitOutcome};
pub use events::{BreakStep, Confirmer, Event, EventRecord, FeedbackDirective};
pub use log::{
    read_log, read_log_file, EventSink, JsonlSink, LogHeader, MemorySink, SessionSummary, LOG_FILE, LOG_SCHEMA, LOG_VERSION,
    SUMMARY_FILE,
};
pub use metrics::{session_metrics, write_metrics_csv, CellScore, MetricsRow, SessionMetrics};
pub use simulate::{simulate_session, SimulatedParticipant, SimulationOptions};
pub use state::{Phase, ScoredResponse, SessionState, Tally};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{StimulusError, TrialPhase, TRAINING_TRIALS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceKind {
    Plain,
    Embodied,
}

impl std::fmt::Display for InterfaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InterfaceKind::Plain => "plain",
            InterfaceKind::Embodied => "embodied",
        })
    }
}

impl std::str::FromStr for InterfaceKind {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(InterfaceKind::Plain),
            "embodied" => Ok(InterfaceKind::Embodied),
            other => Err(SessionError::InvalidConfig(format!("unknown interface {other:?}"))),
        }
    }
}

/// Durations of the feedback cues, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLatencies {
    pub nod: f64,
    pub shake: f64,
    /// Green outline of the correct pair on the plain interface.
    pub highlight: f64,
}

impl Default for FeedbackLatencies {
    fn default() -> Self {
        FeedbackLatencies { nod: 2.5, shake: 3.2, highlight: 0.75 }
    }
}

pub const DEFAULT_BREAK_AFTER: [usize; 2] = [31, 61];
pub const BREAK_WAIT_SECONDS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    pub participant: String,
    pub interface: InterfaceKind,
    pub language: String,
    pub seed: u64,
    /// Experimental trial numbers after which a break is offered.
    #[serde(default = "default_breaks")]
    pub break_after: Vec<usize>,
    #[serde(default)]
    pub latencies: FeedbackLatencies,
    /// Free-form label, e.g. which test visit this is.
    #[serde(default)]
    pub phase_label: Option<String>,
}

fn default_breaks() -> Vec<usize> {
    DEFAULT_BREAK_AFTER.to_vec()
}

impl SessionConfig {
    pub fn new(session_id: impl Into<String>, participant: impl Into<String>, interface: InterfaceKind, seed: u64) -> Self {
        SessionConfig {
            session_id: session_id.into(),
            participant: participant.into(),
            interface,
            language: "en".into(),
            seed,
            break_after: default_breaks(),
            latencies: FeedbackLatencies::default(),
            phase_label: None,
        }
    }

    pub fn validate(&self, experimental_trials: usize) -> Result<(), SessionError> {
        if self.session_id.is_empty() {
            return Err(SessionError::InvalidConfig("empty session id".into()));
        }
        let in_range = |b: &usize| (1..experimental_trials).contains(b);
        if !self.break_after.iter().all(in_range) || !self.break_after.windows(2).all(|w| w[0] < w[1]) {
            return Err(SessionError::InvalidConfig(format!(
                "break indices {:?} must be strictly increasing within 1..{}",
                self.break_after, experimental_trials
            )));
        }
        let l = &self.latencies;
        if [l.nod, l.shake, l.highlight].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SessionError::InvalidConfig("feedback latencies must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("manifest unusable: {0}")]
    Manifest(String),
    #[error("session {0} already exists")]
    DuplicateSession(String),
    #[error("operation not allowed in phase {0}")]
    WrongPhase(Phase),
    #[error("no trial is awaiting a response")]
    NoPendingTrial,
    #[error("{phase:?} trial {index} already has a response")]
    DuplicateSubmission { phase: TrialPhase, index: usize },
    #[error("request id {0:?} was already used for a different response")]
    RequestIdReused(String),
    #[error("no break question is pending")]
    NoBreakPending,
    #[error("reply {0:?} is not yes or no")]
    InvalidReply(String),
    #[error("event {seq} at t={t} is out of order")]
    NonMonotonic { seq: u64, t: f64 },
    #[error("event {seq} ({event}) is not legal here: {reason}")]
    IllegalEvent { seq: u64, event: &'static str, reason: String },
    #[error("session is incomplete: {0}")]
    Incomplete(String),
    #[error("log is malformed: {0}")]
    MalformedLog(String),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse a participant's yes/no break reply.
pub fn parse_reply(text: &str) -> Result<bool, SessionError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" => Ok(true),
        "no" | "n" => Ok(false),
        _ => Err(SessionError::InvalidReply(text.to_string())),
    }
}

/// The ordered training and experimental trials a session serves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub training: Vec<crate::stimulus::TrialSpec>,
    pub experimental: Vec<crate::stimulus::TrialSpec>,
}

impl TrialPlan {
    pub fn from_trials(trials: &[crate::stimulus::TrialSpec]) -> Result<Self, SessionError> {
        let pick = |phase| trials.iter().filter(|t| t.phase == phase).cloned().collect::<Vec<_>>();
        let plan = TrialPlan { training: pick(TrialPhase::Training), experimental: pick(TrialPhase::Experimental) };
        if plan.training.len() != TRAINING_TRIALS {
            return Err(SessionError::Manifest(format!(
                "expected {TRAINING_TRIALS} training trials, found {}",
                plan.training.len()
            )));
        }
        if plan.experimental.is_empty() {
            return Err(SessionError::Manifest("no experimental trials".into()));
        }
        for list in [&plan.training, &plan.experimental] {
            if list.iter().enumerate().any(|(i, t)| t.index != i + 1) {
                return Err(SessionError::Manifest("trial indices must run 1..n in order".into()));
            }
        }
        Ok(plan)
    }

    pub fn trial(&self, phase: TrialPhase, index: usize) -> Option<&crate::stimulus::TrialSpec> {
        let list = match phase {
            TrialPhase::Training => &self.training,
            TrialPhase::Experimental => &self.experimental,
        };
        index.checked_sub(1).and_then(|i| list.get(i))
    }

    pub fn all(&self) -> impl Iterator<Item = &crate::stimulus::TrialSpec> {
        self.training.iter().chain(&self.experimental)
    }
}
