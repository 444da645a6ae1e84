use serde::{Deserialize, Serialize};

use super::state::Phase;
use crate::stimulus::{Color, Number, TrialPhase};

/// What the interface shows or does after a response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeedbackDirective {
    None,
    Nod { duration: f64 },
    Shake { duration: f64 },
    /// Outline the correct pair.
    Highlight { color: Color, number: Number, duration: f64 },
}

impl FeedbackDirective {
    pub fn duration(&self) -> f64 {
        match *self {
            FeedbackDirective::None => 0.0,
            FeedbackDirective::Nod { duration }
            | FeedbackDirective::Shake { duration }
            | FeedbackDirective::Highlight { duration, .. } => duration,
        }
    }
}

/// The question a break dialogue is waiting on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakStep {
    /// Plain interface: a pause screen the participant dismisses.
    Pause,
    /// "Would you like a break?"
    Offer,
    /// "Would you like to stretch with me?"
    Stretch,
    /// "Are you ready to continue?"
    Ready,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confirmer {
    /// The participant touched the agent's head.
    HeadTouch,
    Researcher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    AgentIntroduction { text: String },
    StartScreen,
    PhaseChanged { from: Phase, to: Phase },
    StimulusOnset { phase: TrialPhase, index: usize, stimulus: Option<String> },
    Response {
        phase: TrialPhase,
        index: usize,
        color: Color,
        number: Number,
        correct: bool,
        /// Seconds from stimulus onset.
        response_time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_id: Option<String>,
    },
    Feedback { directive: FeedbackDirective },
    TrainingComplete,
    AdvanceConfirmed { by: Confirmer },
    BreakOffered { after_trial: usize, step: BreakStep },
    BreakReply { step: BreakStep, answer: bool },
    BreakQuestion { step: BreakStep },
    StretchRoutine,
    BreakWait { seconds: f64 },
    BreakEnded,
    SessionDone,
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::AgentIntroduction { .. } => "agent_introduction",
            Event::StartScreen => "start_screen",
            Event::PhaseChanged { .. } => "phase_changed",
            Event::StimulusOnset { .. } => "stimulus_onset",
            Event::Response { .. } => "response",
            Event::Feedback { .. } => "feedback",
            Event::TrainingComplete => "training_complete",
            Event::AdvanceConfirmed { .. } => "advance_confirmed",
            Event::BreakOffered { .. } => "break_offered",
            Event::BreakReply { .. } => "break_reply",
            Event::BreakQuestion { .. } => "break_question",
            Event::StretchRoutine => "stretch_routine",
            Event::BreakWait { .. } => "break_wait",
            Event::BreakEnded => "break_ended",
            Event::SessionDone => "session_done",
        }
    }
}

/// One line of the session log. `t` is wall-clock seconds (Unix time for
/// live sessions, virtual time for simulations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub t: f64,
    #[serde(flatten)]
    pub event: Event,
}
