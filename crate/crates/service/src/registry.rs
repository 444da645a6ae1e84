use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crm_core::session::{JsonlSink, Session, SessionConfig, SessionError};
use crm_core::stimulus::{build_condition_grid, pregenerate_corpus, Corpus, RenderOptions, TrialSpec};
use uuid::Uuid;

use crate::api::{CreateSessionRequest, SessionHandle, SessionView};
use crate::config::ServiceConfig;
use crate::error::ServiceError;

/// One live session. Mutations queue on `writer`; readers use `view`, which
/// is replaced after every mutation while the writer lock is held.
pub struct SessionSlot {
    token: String,
    pub created_at_unix: u64,
    pub dir: PathBuf,
    writer: tokio::sync::Mutex<Session>,
    view: RwLock<SessionView>,
}

impl SessionSlot {
    pub fn view(&self) -> SessionView {
        self.view.read().expect("view lock poisoned").clone()
    }

    pub fn authorize(&self, token: Option<&str>) -> Result<(), ServiceError> {
        match token {
            Some(t) if t == self.token => Ok(()),
            _ => Err(ServiceError::Unauthorized),
        }
    }
}

#[derive(Debug, Clone)]
struct Ticket {
    session_id: String,
    path: PathBuf,
}

pub struct AppState {
    pub config: ServiceConfig,
    started: Instant,
    corpora: tokio::sync::Mutex<HashMap<String, Arc<Corpus>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    tickets: Mutex<HashMap<String, Ticket>>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn opaque_id() -> String {
    Uuid::new_v4().simple().to_string()
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            config,
            started: Instant::now(),
            corpora: tokio::sync::Mutex::default(),
            sessions: RwLock::default(),
            tickets: Mutex::default(),
        }
    }

    /// Unix time in seconds; session event times use it.
    pub fn now(&self) -> f64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
    }

    pub fn uptime(&self) -> std::time::Duration {
        self.started.elapsed()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table poisoned").len()
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionSlot>, ServiceError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    async fn corpus(&self, language: &str) -> Result<Arc<Corpus>, ServiceError> {
        let installed = self.config.installed_languages();
        if !installed.iter().any(|l| l == language) {
            return Err(ServiceError::UnknownLanguage { requested: language.to_string(), installed });
        }
        let mut cache = self.corpora.lock().await;
        if let Some(c) = cache.get(language) {
            return Ok(c.clone());
        }
        let dir = self.config.corpus_dir.join(language);
        let corpus = tokio::task::spawn_blocking(move || Corpus::load_dir(dir))
            .await
            .map_err(|e| ServiceError::Internal(e.to_string()))?
            .map_err(|e| ServiceError::CorpusUnusable { language: language.to_string(), reason: e.to_string() })?;
        let corpus = Arc::new(corpus);
        cache.insert(language.to_string(), corpus.clone());
        Ok(corpus)
    }

    /// Render the participant's stimuli, open the event log and show the
    /// introduction. Returns only once the stimuli are on disk.
    pub async fn create_session(&self, req: CreateSessionRequest) -> Result<SessionHandle, ServiceError> {
        if req.participant.trim().is_empty() {
            return Err(ServiceError::BadRequest("participant must not be empty".into()));
        }
        let corpus = self.corpus(&req.language).await?;
        let session_id = opaque_id();
        let seed = req.seed.unwrap_or_else(|| Uuid::new_v4().as_u64_pair().0);
        let mut config = SessionConfig::new(&session_id, req.participant.trim(), req.interface, seed);
        config.language = req.language.clone();
        config.phase_label = req.phase.clone();
        config.break_after = self.config.break_after.clone();
        config.latencies = self.config.latencies;
        let grid = build_condition_grid();
        config.validate(grid.total_trials())?;

        let dir = self.config.data_dir.join(&session_id);
        let render_dir = dir.clone();
        let manifest =
            tokio::task::spawn_blocking(move || pregenerate_corpus(&grid, &corpus, seed, render_dir, RenderOptions::default()))
                .await
                .map_err(|e| ServiceError::Internal(e.to_string()))?
                .map_err(|e| ServiceError::Pregeneration(e.to_string()))?;

        let sink = JsonlSink::create(&dir)?;
        let session = Session::start(config, &manifest.trials, Box::new(sink), self.config.agent_mode.adapter(), self.now())?;
        let created_at_unix = unix_now();
        let view = SessionView::of(session.config(), session.state(), created_at_unix);
        let token = opaque_id();
        let slot = Arc::new(SessionSlot {
            token: token.clone(),
            created_at_unix,
            dir,
            writer: tokio::sync::Mutex::new(session),
            view: RwLock::new(view.clone()),
        });
        self.sessions.write().expect("session table poisoned").insert(session_id.clone(), slot);
        log::info!("session {session_id} created for {} ({})", req.participant, req.interface);
        Ok(SessionHandle {
            session_id,
            token,
            participant: view.participant.clone(),
            interface: view.interface,
            created_at_unix,
            state: view,
        })
    }

    /// Run `f` as the session's single writer and refresh its snapshot.
    pub async fn mutate<R>(
        &self,
        slot: &SessionSlot,
        f: impl FnOnce(&mut Session, f64) -> Result<R, SessionError>,
    ) -> Result<R, ServiceError> {
        let mut session = slot.writer.lock().await;
        let result = f(&mut session, self.now());
        *slot.view.write().expect("view lock poisoned") =
            SessionView::of(session.config(), session.state(), slot.created_at_unix);
        Ok(result?)
    }

    /// Read the live session under the writer lock.
    pub async fn inspect<R>(&self, slot: &SessionSlot, f: impl FnOnce(&Session) -> R) -> R {
        f(&*slot.writer.lock().await)
    }

    /// A single-use link to `spec`'s stimulus. Earlier links of the same
    /// session stop working.
    pub fn issue_ticket(&self, session_id: &str, dir: &std::path::Path, spec: &TrialSpec) -> Result<String, ServiceError> {
        let rel = spec.stimulus.as_ref().ok_or_else(|| ServiceError::Internal("trial has no stimulus file".into()))?;
        let ticket = opaque_id();
        let mut tickets = self.tickets.lock().expect("ticket table poisoned");
        tickets.retain(|_, t| t.session_id != session_id);
        tickets.insert(ticket.clone(), Ticket { session_id: session_id.to_string(), path: dir.join(rel) });
        Ok(format!("/v1/stimuli/{ticket}"))
    }

    /// Consume a ticket, returning the file it pointed at.
    pub fn redeem_ticket(&self, ticket: &str) -> Result<PathBuf, ServiceError> {
        self.tickets
            .lock()
            .expect("ticket table poisoned")
            .remove(ticket)
            .map(|t| t.path)
            .ok_or(ServiceError::StimulusGone)
    }
}
