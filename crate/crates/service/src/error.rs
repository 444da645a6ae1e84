use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use crm_core::session::SessionError;
use crm_core::stimulus::StimulusError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("language {requested:?} is not installed")]
    UnknownLanguage { requested: String, installed: Vec<String> },
    #[error("corpus for {language:?} is unusable: {reason}")]
    CorpusUnusable { language: String, reason: String },
    #[error("stimulus pregeneration failed: {0}")]
    Pregeneration(String),
    #[error("no session {0}")]
    UnknownSession(String),
    #[error("missing or wrong session token")]
    Unauthorized,
    #[error("stimulus link is unknown or already used")]
    StimulusGone,
    #[error("illegal keyword: {0}")]
    IllegalKeyword(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<StimulusError> for ServiceError {
    fn from(e: StimulusError) -> Self {
        match e {
            StimulusError::IllegalKeyword(k) => ServiceError::IllegalKeyword(k),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub installed_languages: Option<Vec<String>>,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownLanguage { .. } | ServiceError::IllegalKeyword(_) | ServiceError::BadRequest(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::UnknownSession(_) | ServiceError::StimulusGone => StatusCode::NOT_FOUND,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Session(e) => match e {
                SessionError::WrongPhase(_)
                | SessionError::NoPendingTrial
                | SessionError::DuplicateSubmission { .. }
                | SessionError::RequestIdReused(_)
                | SessionError::NoBreakPending
                | SessionError::DuplicateSession(_)
                | SessionError::Incomplete(_) => StatusCode::CONFLICT,
                SessionError::InvalidReply(_) | SessionError::InvalidConfig(_) => StatusCode::UNPROCESSABLE_ENTITY,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServiceError::CorpusUnusable { .. } | ServiceError::Pregeneration(_) | ServiceError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownLanguage { .. } => "unknown_language",
            ServiceError::CorpusUnusable { .. } => "corpus_unusable",
            ServiceError::Pregeneration(_) => "pregeneration_failed",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::StimulusGone => "stimulus_gone",
            ServiceError::IllegalKeyword(_) => "illegal_keyword",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Session(e) => match e {
                SessionError::WrongPhase(_) => "wrong_phase",
                SessionError::NoPendingTrial => "no_pending_trial",
                SessionError::DuplicateSubmission { .. } => "duplicate_submission",
                SessionError::RequestIdReused(_) => "request_id_reused",
                SessionError::NoBreakPending => "no_break_pending",
                SessionError::DuplicateSession(_) => "duplicate_session",
                SessionError::Incomplete(_) => "session_incomplete",
                SessionError::InvalidReply(_) => "invalid_reply",
                SessionError::InvalidConfig(_) => "invalid_config",
                _ => "session_error",
            },
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
            installed_languages: match self {
                ServiceError::UnknownLanguage { installed, .. } => Some(installed.clone()),
                _ => None,
            },
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        (self.status(), Json(self.body())).into_response()
    }
}
