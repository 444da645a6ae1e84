use std::net::SocketAddr;
use std::path::PathBuf;

use crm_core::session::{AgentAdapter, FeedbackLatencies, LoggingAgent, SimulatedAgent, DEFAULT_BREAK_AFTER};
use serde::{Deserialize, Serialize};

/// Which agent adapter new sessions drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Record actions in memory.
    #[default]
    Simulated,
    /// Write actions to the service log.
    Logging,
}

impl AgentMode {
    pub fn adapter(self) -> Box<dyn AgentAdapter> {
        match self {
            AgentMode::Simulated => Box::new(SimulatedAgent::new()),
            AgentMode::Logging => Box::new(LoggingAgent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    /// One subdirectory of sentence WAVs per language.
    pub corpus_dir: PathBuf,
    /// Session directories (stimuli, manifest, event log, summary).
    pub data_dir: PathBuf,
    pub listen: SocketAddr,
    pub agent_mode: AgentMode,
    pub break_after: Vec<usize>,
    pub latencies: FeedbackLatencies,
}

impl ServiceConfig {
    pub fn new(corpus_dir: impl Into<PathBuf>, data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            corpus_dir: corpus_dir.into(),
            data_dir: data_dir.into(),
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            agent_mode: AgentMode::default(),
            break_after: DEFAULT_BREAK_AFTER.to_vec(),
            latencies: FeedbackLatencies::default(),
        }
    }

    /// Languages with a corpus directory, sorted.
    pub fn installed_languages(&self) -> Vec<String> {
        let Ok(entries) = std::fs::read_dir(&self.corpus_dir) else {
            return Vec::new();
        };
        let mut langs: Vec<String> = entries
            .filter_map(Result::ok)
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().to_str().map(str::to_string))
            .filter(|name| !name.starts_with('.'))
            .collect();
        langs.sort();
        langs
    }
}
