use std::sync::Arc;

use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crm_core::session::{
    parse_reply, session_metrics, write_metrics_csv, BreakProgress, NextStep, ResponseInput, SessionError,
    SubmitOutcome,
};
use crm_core::stimulus::{Color, Number};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::api::{
    BreakRequest, ConfirmRequest, CreateSessionRequest, CurrentTrial, Health, Languages, Progress, Reply,
    ResponseRequest, SessionHandle, SessionView, API_VERSION, TOKEN_HEADER,
};
use crate::error::ServiceError;
use crate::registry::AppState;

type Shared = State<Arc<AppState>>;

/// JSON body whose rejections use the service's error shape.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|e| ServiceError::BadRequest(e.body_text()))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/languages", get(languages))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/begin", post(begin))
        .route("/v1/sessions/{id}/trial", get(current_trial))
        .route("/v1/sessions/{id}/responses", post(post_response))
        .route("/v1/sessions/{id}/confirm", post(confirm))
        .route("/v1/sessions/{id}/break", post(break_reply))
        .route("/v1/sessions/{id}/metrics", get(metrics))
        .route("/v1/stimuli/{ticket}", get(stimulus))
        .with_state(state)
}

fn token(headers: &HeaderMap) -> Option<&str> {
    headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok())
}

async fn health(State(app): Shared) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        api_version: API_VERSION,
        uptime_s: app.uptime().as_secs_f64(),
        sessions: app.session_count(),
    })
}

async fn languages(State(app): Shared) -> Json<Languages> {
    Json(Languages { languages: app.config.installed_languages() })
}

async fn create_session(
    State(app): Shared,
    ApiJson(req): ApiJson<CreateSessionRequest>,
) -> Result<(StatusCode, Json<SessionHandle>), ServiceError> {
    Ok((StatusCode::CREATED, Json(app.create_session(req).await?)))
}

async fn get_session(State(app): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(app.session(&id)?.view()))
}

async fn begin(State(app): Shared, Path(id): Path<String>, headers: HeaderMap) -> Result<Json<SessionView>, ServiceError> {
    let slot = app.session(&id)?;
    slot.authorize(token(&headers))?;
    app.mutate(&slot, |s, at| s.begin(at)).await?;
    Ok(Json(slot.view()))
}

/// Present the next trial (or report why there is none). Repeating the call
/// while a trial is open returns the same trial with a fresh link.
async fn current_trial(State(app): Shared, Path(id): Path<String>, headers: HeaderMap) -> Result<Json<CurrentTrial>, ServiceError> {
    let slot = app.session(&id)?;
    slot.authorize(token(&headers))?;
    let (step, progress) = app
        .mutate(&slot, |s, at| {
            let step = s.next_trial(at)?;
            let st = s.state();
            let progress = match &step {
                NextStep::Trial(spec) => {
                    let total = match spec.phase {
                        crm_core::stimulus::TrialPhase::Training => st.training_total,
                        crm_core::stimulus::TrialPhase::Experimental => st.experimental_total,
                    };
                    Progress { done: st.done_in(spec.phase), total }
                }
                _ => Progress { done: 0, total: 0 },
            };
            Ok::<_, SessionError>((step, progress))
        })
        .await?;
    let body = match step {
        NextStep::Trial(spec) => CurrentTrial::Trial {
            phase: spec.phase,
            index: spec.index,
            progress,
            stimulus_url: app.issue_ticket(&id, &slot.dir, &spec)?,
        },
        NextStep::AwaitConfirmation => CurrentTrial::AwaitConfirmation,
        NextStep::Break(question) => CurrentTrial::Break { question },
        NextStep::Done => CurrentTrial::Done,
    };
    Ok(Json(body))
}

async fn stimulus(State(app): Shared, Path(ticket): Path<String>) -> Result<Response, ServiceError> {
    let path = app.redeem_ticket(&ticket)?;
    let bytes = tokio::fs::read(&path).await?;
    Ok((
        [(header::CONTENT_TYPE, "audio/wav"), (header::CACHE_CONTROL, "no-store")],
        bytes,
    )
        .into_response())
}

async fn post_response(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<ResponseRequest>,
) -> Result<Json<SubmitOutcome>, ServiceError> {
    let slot = app.session(&id)?;
    slot.authorize(token(&headers))?;
    let input = ResponseInput {
        color: req.color.parse::<Color>()?,
        number: Number::new(req.number)?,
        request_id: req.request_id,
    };
    Ok(Json(app.mutate(&slot, |s, at| s.submit_response(input, at)).await?))
}

async fn confirm(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<ConfirmRequest>,
) -> Result<Json<SessionView>, ServiceError> {
    let slot = app.session(&id)?;
    slot.authorize(token(&headers))?;
    app.mutate(&slot, |s, at| s.confirm_advance(req.by, at)).await?;
    Ok(Json(slot.view()))
}

async fn break_reply(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    ApiJson(req): ApiJson<BreakRequest>,
) -> Result<Json<BreakProgress>, ServiceError> {
    let slot = app.session(&id)?;
    slot.authorize(token(&headers))?;
    let answer = match req.answer {
        Reply::Flag(b) => b,
        Reply::Text(t) => parse_reply(&t)?,
    };
    Ok(Json(app.mutate(&slot, |s, at| s.break_reply(answer, at)).await?))
}

#[derive(Debug, Deserialize)]
struct MetricsQuery {
    #[serde(default)]
    format: Option<String>,
}

/// Per-cell scores of a finished session: CSV rows for the statistics
/// tools by default, or the full summary with `?format=json`.
async fn metrics(State(app): Shared, Path(id): Path<String>, Query(q): Query<MetricsQuery>) -> Result<Response, ServiceError> {
    let slot = app.session(&id)?;
    let m = app.inspect(&slot, |s| session_metrics(&s.header(), s.records())).await?;
    match q.format.as_deref() {
        None | Some("csv") => {
            let mut out = Vec::new();
            write_metrics_csv(&m.rows(), &mut out)?;
            Ok(([(header::CONTENT_TYPE, "text/csv")], out).into_response())
        }
        Some("json") => Ok(Json(m).into_response()),
        Some(other) => Err(ServiceError::BadRequest(format!("unknown format {other:?}"))),
    }
}
