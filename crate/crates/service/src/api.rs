//! Request and response bodies of the `/v1` HTTP API.
//!
//! Nothing here carries the target sentence of a trial that has not been
//! answered yet.

use crm_core::session::{BreakStep, Confirmer, InterfaceKind, Phase, SessionConfig, SessionState};
use crm_core::stimulus::TrialPhase;
use serde::{Deserialize, Serialize};

pub const API_VERSION: u32 = 1;
pub const TOKEN_HEADER: &str = "x-session-token";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub participant: String,
    pub language: String,
    pub interface: InterfaceKind,
    /// Which test visit this is, e.g. "first".
    #[serde(default)]
    pub phase: Option<String>,
    /// Fixes the trial plan; random when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRef {
    pub phase: TrialPhase,
    pub index: usize,
}

/// Snapshot of one session, enough for a client to rebuild its screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub api_version: u32,
    pub session_id: String,
    pub participant: String,
    pub interface: InterfaceKind,
    pub language: String,
    pub phase_label: Option<String>,
    pub created_at_unix: u64,
    pub phase: Phase,
    pub training: Progress,
    pub experimental: Progress,
    pub awaiting_confirmation: bool,
    pub pending_trial: Option<TrialRef>,
    pub break_question: Option<BreakStep>,
    pub events: u64,
}

impl SessionView {
    pub fn of(config: &SessionConfig, state: &SessionState, created_at_unix: u64) -> Self {
        SessionView {
            api_version: API_VERSION,
            session_id: config.session_id.clone(),
            participant: config.participant.clone(),
            interface: config.interface,
            language: config.language.clone(),
            phase_label: config.phase_label.clone(),
            created_at_unix,
            phase: state.phase,
            training: Progress { done: state.training.total, total: state.training_total },
            experimental: Progress { done: state.experimental.total, total: state.experimental_total },
            awaiting_confirmation: state.awaiting_confirmation,
            pending_trial: state.pending.map(|p| TrialRef { phase: p.phase, index: p.index }),
            break_question: state.break_step,
            events: state.events,
        }
    }
}

/// Returned once, at creation. The token authorizes every later mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub session_id: String,
    pub token: String,
    pub participant: String,
    pub interface: InterfaceKind,
    pub created_at_unix: u64,
    pub state: SessionView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CurrentTrial {
    Trial {
        phase: TrialPhase,
        index: usize,
        /// Progress within the phase, counting this trial as not done.
        progress: Progress,
        /// Single-use link to the stimulus WAV.
        stimulus_url: String,
    },
    AwaitConfirmation,
    Break {
        question: BreakStep,
    },
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRequest {
    pub color: String,
    pub number: u8,
    /// Client-chosen id that makes retries safe.
    #[serde(default)]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmRequest {
    pub by: Confirmer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Flag(bool),
    /// "yes" / "no" (also "y" / "n").
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakRequest {
    pub answer: Reply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Languages {
    pub languages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub api_version: u32,
    pub uptime_s: f64,
    pub sessions: usize,
}
