use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EyeColor {
    Neutral,
    /// Response window open.
    Green,
}

/// Capabilities the engine drives on an embodied interface.
pub trait AgentAdapter: Send {
    fn speak(&mut self, text: &str);
    fn nod(&mut self, seconds: f64);
    fn shake(&mut self, seconds: f64);
    fn eye_color(&mut self, color: EyeColor);
    fn stretch(&mut self);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum AgentAction {
    Speak { text: String },
    Nod { seconds: f64 },
    Shake { seconds: f64 },
    Eyes { color: EyeColor },
    Stretch,
}

/// Records every action and how long the agent would be busy. Clones share
/// the same record.
#[derive(Debug, Clone, Default)]
pub struct SimulatedAgent {
    actions: Arc<Mutex<Vec<AgentAction>>>,
    pub stretch_seconds: f64,
}

impl SimulatedAgent {
    pub const DEFAULT_STRETCH_SECONDS: f64 = 30.0;

    pub fn new() -> Self {
        SimulatedAgent { actions: Arc::default(), stretch_seconds: Self::DEFAULT_STRETCH_SECONDS }
    }

    pub fn actions(&self) -> Vec<AgentAction> {
        self.actions.lock().expect("agent record poisoned").clone()
    }

    /// Total time spent in gestures and routines.
    pub fn busy_seconds(&self) -> f64 {
        self.actions()
            .iter()
            .map(|a| match a {
                AgentAction::Nod { seconds } | AgentAction::Shake { seconds } => *seconds,
                AgentAction::Stretch => self.stretch_seconds,
                _ => 0.0,
            })
            .sum()
    }

    fn push(&self, action: AgentAction) {
        self.actions.lock().expect("agent record poisoned").push(action);
    }
}

impl AgentAdapter for SimulatedAgent {
    fn speak(&mut self, text: &str) {
        self.push(AgentAction::Speak { text: text.to_string() });
    }
    fn nod(&mut self, seconds: f64) {
        self.push(AgentAction::Nod { seconds });
    }
    fn shake(&mut self, seconds: f64) {
        self.push(AgentAction::Shake { seconds });
    }
    fn eye_color(&mut self, color: EyeColor) {
        self.push(AgentAction::Eyes { color });
    }
    fn stretch(&mut self) {
        self.push(AgentAction::Stretch);
    }
}

/// Writes each action to the `log` facade and does nothing else.
#[derive(Debug, Clone, Default)]
pub struct LoggingAgent;

impl AgentAdapter for LoggingAgent {
    fn speak(&mut self, text: &str) {
        log::info!("agent says {text:?}");
    }
    fn nod(&mut self, seconds: f64) {
        log::info!("agent nods for {seconds} s");
    }
    fn shake(&mut self, seconds: f64) {
        log::info!("agent shakes its head for {seconds} s");
    }
    fn eye_color(&mut self, color: EyeColor) {
        log::info!("agent eyes {color:?}");
    }
    fn stretch(&mut self) {
        log::info!("agent runs the stretch routine");
    }
}
