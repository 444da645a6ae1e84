use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use crm_core::stimulus::{Corpus, Manifest, TrialSpec, MANIFEST_FILE};
use crm_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use std::sync::Arc;
use tempfile::TempDir;
use tower::ServiceExt;

struct Harness {
    app: Router,
    data: std::path::PathBuf,
    _dir: TempDir,
}

fn harness_with(break_after: Vec<usize>) -> Harness {
    let dir = TempDir::new().unwrap();
    Corpus::synthetic(3, 16_000).write_dir(dir.path().join("corpus/en")).unwrap();
    let mut config = ServiceConfig::new(dir.path().join("corpus"), dir.path().join("data"));
    config.break_after = break_after;
    Harness { app: router(Arc::new(AppState::new(config))), data: dir.path().join("data"), _dir: dir }
}

fn harness() -> Harness {
    harness_with(vec![31, 61])
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }
}

async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("x-session-token", t);
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, bytes }
}

struct Client {
    id: String,
    token: String,
}

impl Client {
    async fn create(h: &Harness, participant: &str, interface: &str) -> Client {
        let r = call(
            &h.app,
            Method::POST,
            "/v1/sessions",
            None,
            Some(json!({"participant": participant, "language": "en", "interface": interface, "seed": 11})),
        )
        .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
        let v = r.json();
        Client { id: v["session_id"].as_str().unwrap().into(), token: v["token"].as_str().unwrap().into() }
    }

    async fn post(&self, h: &Harness, action: &str, body: Option<Value>) -> Reply {
        call(&h.app, Method::POST, &format!("/v1/sessions/{}/{action}", self.id), Some(&self.token), body).await
    }

    async fn trial(&self, h: &Harness) -> Reply {
        call(&h.app, Method::GET, &format!("/v1/sessions/{}/trial", self.id), Some(&self.token), None).await
    }

    fn manifest(&self, h: &Harness) -> Manifest {
        Manifest::read(h.data.join(&self.id).join(MANIFEST_FILE)).unwrap()
    }
}

fn spec_of<'a>(m: &'a Manifest, trial: &Value) -> &'a TrialSpec {
    let phase: crm_core::stimulus::TrialPhase = serde_json::from_value(trial["phase"].clone()).unwrap();
    let index = trial["index"].as_u64().unwrap() as usize;
    m.trials.iter().find(|t| t.phase == phase && t.index == index).unwrap()
}

fn answer(spec: &TrialSpec, correct: bool) -> Value {
    let color = spec.target.color.as_str();
    let number = spec.target.number.value();
    let number = if correct { number } else { number % 8 + 1 };
    json!({"color": color, "number": number})
}

#[tokio::test]
async fn health_and_languages() {
    let h = harness();
    let r = call(&h.app, Method::GET, "/v1/health", None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["api_version"], 1);
    assert_eq!(r.json()["sessions"], 0);
    let r = call(&h.app, Method::GET, "/v1/languages", None, None).await;
    assert_eq!(r.json(), json!({"languages": ["en"]}));
}

#[tokio::test]
async fn created_session_shows_introduction_and_renders_stimuli() {
    let h = harness();
    let c = Client::create(&h, "P01", "embodied").await;
    let r = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await;
    let v = r.json();
    assert_eq!(v["phase"], "intro");
    assert_eq!(v["participant"], "P01");
    assert_eq!(v["training"], json!({"done": 0, "total": 4}));
    assert_eq!(v["experimental"], json!({"done": 0, "total": 91}));
    assert_eq!(c.manifest(&h).trials.len(), 95);
    assert!(h.data.join(&c.id).join("events.jsonl").is_file());
}

#[tokio::test]
async fn unknown_language_lists_installed_ones() {
    let h = harness();
    let r = call(
        &h.app,
        Method::POST,
        "/v1/sessions",
        None,
        Some(json!({"participant": "P01", "language": "fr", "interface": "plain"})),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let v = r.json();
    assert_eq!(v["error"], "unknown_language");
    assert_eq!(v["installed_languages"], json!(["en"]));
}

#[tokio::test]
async fn malformed_body_is_rejected_with_error_shape() {
    let h = harness();
    let r = call(&h.app, Method::POST, "/v1/sessions", None, Some(json!({"participant": "P01"}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"], "bad_request");
}

#[tokio::test]
async fn one_participant_gets_separate_sessions_per_interface() {
    let h = harness();
    let a = Client::create(&h, "P07", "plain").await;
    let b = Client::create(&h, "P07", "embodied").await;
    assert_ne!(a.id, b.id);
    assert_ne!(a.token, b.token);
    let va = call(&h.app, Method::GET, &format!("/v1/sessions/{}", a.id), None, None).await.json();
    let vb = call(&h.app, Method::GET, &format!("/v1/sessions/{}", b.id), None, None).await.json();
    assert_eq!(va["interface"], "plain");
    assert_eq!(vb["interface"], "embodied");
}

#[tokio::test]
async fn mutations_need_the_session_token() {
    let h = harness();
    let c = Client::create(&h, "P02", "plain").await;
    let uri = format!("/v1/sessions/{}/begin", c.id);
    assert_eq!(call(&h.app, Method::POST, &uri, None, None).await.status, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&h.app, Method::POST, &uri, Some("nope"), None).await.status, StatusCode::UNAUTHORIZED);
    let r = call(&h.app, Method::GET, &format!("/v1/sessions/{}/trial", c.id), None, None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(c.post(&h, "begin", None).await.status, StatusCode::OK);
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let h = harness();
    let r = call(&h.app, Method::GET, "/v1/sessions/missing", None, None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"], "unknown_session");
}

#[tokio::test]
async fn trial_before_begin_conflicts() {
    let h = harness();
    let c = Client::create(&h, "P02", "plain").await;
    let r = c.trial(&h).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["error"], "wrong_phase");
}

#[tokio::test]
async fn first_training_trial_hides_the_answer() {
    let h = harness();
    let c = Client::create(&h, "P03", "plain").await;
    c.post(&h, "begin", None).await;
    let r = c.trial(&h).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["status"], "trial");
    assert_eq!(v["phase"], "training");
    assert_eq!(v["index"], 1);
    assert_eq!(v["progress"], json!({"done": 0, "total": 4}));
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 5, "{keys:?}");
    let text = String::from_utf8(r.bytes.clone()).unwrap().to_lowercase();
    for word in ["color", "number", "target", "red", "green", "pink", "white", "black", "blue", "dog", "cat", ".wav"] {
        assert!(!text.contains(word), "trial payload leaks {word:?}: {text}");
    }
    let view = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await.json();
    assert_eq!(view["phase"], "training");
    assert_eq!(view["pending_trial"], json!({"phase": "training", "index": 1}));
}

#[tokio::test]
async fn stimulus_links_are_single_use() {
    let h = harness();
    let c = Client::create(&h, "P04", "plain").await;
    c.post(&h, "begin", None).await;
    let first = c.trial(&h).await.json()["stimulus_url"].as_str().unwrap().to_string();
    let second = c.trial(&h).await.json();
    assert_eq!(second["index"], 1, "repeating the call keeps the open trial");
    let url = second["stimulus_url"].as_str().unwrap();
    assert_ne!(first, url);

    assert_eq!(call(&h.app, Method::GET, &first, None, None).await.status, StatusCode::NOT_FOUND);
    let r = call(&h.app, Method::GET, url, None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type.as_deref(), Some("audio/wav"));
    assert_eq!(&r.bytes[..4], b"RIFF");
    let again = call(&h.app, Method::GET, url, None, None).await;
    assert_eq!(again.status, StatusCode::NOT_FOUND);
    assert_eq!(again.json()["error"], "stimulus_gone");
}

#[tokio::test]
async fn plain_feedback_is_silent_when_right_and_highlights_when_wrong() {
    let h = harness();
    let c = Client::create(&h, "P05", "plain").await;
    let m = c.manifest(&h);
    c.post(&h, "begin", None).await;

    let spec = spec_of(&m, &c.trial(&h).await.json()).clone();
    let v = c.post(&h, "responses", Some(answer(&spec, true))).await.json();
    assert_eq!(v["correct"], true);
    assert_eq!(v["feedback"], json!({"kind": "none"}));

    let spec = spec_of(&m, &c.trial(&h).await.json()).clone();
    let v = c.post(&h, "responses", Some(answer(&spec, false))).await.json();
    assert_eq!(v["correct"], false);
    assert_eq!(v["feedback"]["kind"], "highlight");
    assert_eq!(v["feedback"]["color"], spec.target.color.as_str());
    assert_eq!(v["feedback"]["number"], spec.target.number.value());
}

#[tokio::test]
async fn embodied_feedback_nods_and_shakes() {
    let h = harness();
    let c = Client::create(&h, "P06", "embodied").await;
    let m = c.manifest(&h);
    c.post(&h, "begin", None).await;

    let spec = spec_of(&m, &c.trial(&h).await.json()).clone();
    let v = c.post(&h, "responses", Some(answer(&spec, true))).await.json();
    assert_eq!(v["feedback"], json!({"kind": "nod", "duration": 2.5}));

    let spec = spec_of(&m, &c.trial(&h).await.json()).clone();
    let v = c.post(&h, "responses", Some(answer(&spec, false))).await.json();
    assert_eq!(v["feedback"], json!({"kind": "shake", "duration": 3.2}));
}

#[tokio::test]
async fn retried_request_id_replays_the_outcome() {
    let h = harness();
    let c = Client::create(&h, "P08", "plain").await;
    let m = c.manifest(&h);
    c.post(&h, "begin", None).await;
    let spec = spec_of(&m, &c.trial(&h).await.json()).clone();
    let mut body = answer(&spec, true);
    body["request_id"] = json!("r-1");
    let first = c.post(&h, "responses", Some(body.clone())).await.json();
    let retry = c.post(&h, "responses", Some(body)).await;
    assert_eq!(retry.status, StatusCode::OK);
    let retry = retry.json();
    assert_eq!(retry["replayed"], true);
    assert_eq!(retry["index"], first["index"]);
    assert_eq!(retry["correct"], first["correct"]);

    let view = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await.json();
    assert_eq!(view["training"]["done"], 1);

    let dup = c.post(&h, "responses", Some(answer(&spec, true))).await;
    assert_eq!(dup.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn illegal_keywords_are_rejected() {
    let h = harness();
    let c = Client::create(&h, "P09", "plain").await;
    c.post(&h, "begin", None).await;
    c.trial(&h).await;
    let r = c.post(&h, "responses", Some(json!({"color": "red", "number": 7}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["error"], "illegal_keyword");
    let r = c.post(&h, "responses", Some(json!({"color": "purple", "number": 1}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let view = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await.json();
    assert_eq!(view["training"]["done"], 0);
}

/// Drive a whole session, answering every trial correctly and declining or
/// dismissing every break. Returns the break questions seen.
async fn run_to_done(h: &Harness, c: &Client) -> Vec<String> {
    let m = c.manifest(h);
    let mut breaks = Vec::new();
    assert_eq!(c.post(h, "begin", None).await.status, StatusCode::OK);
    for _ in 0..200 {
        let r = c.trial(h).await;
        assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
        let v = r.json();
        match v["status"].as_str().unwrap() {
            "trial" => {
                let spec = spec_of(&m, &v).clone();
                let out = c.post(h, "responses", Some(answer(&spec, true))).await;
                assert_eq!(out.status, StatusCode::OK);
            }
            "await_confirmation" => {
                let early = c.post(h, "responses", Some(json!({"color": "red", "number": 1}))).await;
                assert_eq!(early.status, StatusCode::CONFLICT);
                assert_eq!(c.post(h, "confirm", Some(json!({"by": "researcher"}))).await.status, StatusCode::OK);
            }
            "break" => {
                breaks.push(v["question"].as_str().unwrap().to_string());
                let r = c.post(h, "break", Some(json!({"answer": "no"}))).await;
                assert_eq!(r.status, StatusCode::OK);
                assert_eq!(r.json()["resumed"], true);
            }
            "done" => return breaks,
            other => panic!("unexpected status {other}"),
        }
    }
    panic!("session did not finish");
}

#[tokio::test]
async fn full_session_yields_metrics() {
    let h = harness();
    let c = Client::create(&h, "P10", "plain").await;

    let early = call(&h.app, Method::GET, &format!("/v1/sessions/{}/metrics", c.id), None, None).await;
    assert_eq!(early.status, StatusCode::CONFLICT);

    let breaks = run_to_done(&h, &c).await;
    assert_eq!(breaks, ["pause", "pause"]);
    let view = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await.json();
    assert_eq!(view["phase"], "done");
    assert_eq!(view["experimental"], json!({"done": 91, "total": 91}));

    let r = call(&h.app, Method::GET, &format!("/v1/sessions/{}/metrics", c.id), None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type.as_deref(), Some("text/csv"));
    let rows = crm_core::stats::read_metrics_csv(&r.bytes[..]).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|row| row.participant == "P10" && row.percent_correct == 100.0));

    let j = call(&h.app, Method::GET, &format!("/v1/sessions/{}/metrics?format=json", c.id), None, None).await;
    assert_eq!(j.status, StatusCode::OK);
    assert_eq!(j.json()["participant"], "P10");
    let bad = call(&h.app, Method::GET, &format!("/v1/sessions/{}/metrics?format=xml", c.id), None, None).await;
    assert_eq!(bad.status, StatusCode::UNPROCESSABLE_ENTITY);

    let log = std::fs::read_to_string(h.data.join(&c.id).join("events.jsonl")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(view["events"].as_u64().unwrap() as usize, lines.len() - 1);
    let last: Value = serde_json::from_str(lines.last().unwrap()).unwrap();
    assert_eq!(last["type"], "session_done");
    let first: Value = serde_json::from_str(lines[1]).unwrap();
    let unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap().as_secs_f64();
    assert!((first["t"].as_f64().unwrap() - unix).abs() < 600.0, "event times are Unix seconds");
    let responses = lines.iter().filter(|l| l.contains(r#""type":"response""#)).count();
    assert_eq!(responses, 95);
}

#[tokio::test]
async fn embodied_break_asks_stretch_then_ready() {
    let h = harness_with(vec![1]);
    let c = Client::create(&h, "P11", "embodied").await;
    let m = c.manifest(&h);
    c.post(&h, "begin", None).await;
    loop {
        let v = c.trial(&h).await.json();
        match v["status"].as_str().unwrap() {
            "trial" => {
                let spec = spec_of(&m, &v).clone();
                c.post(&h, "responses", Some(answer(&spec, true))).await;
            }
            "await_confirmation" => {
                c.post(&h, "confirm", Some(json!({"by": "head_touch"}))).await;
            }
            "break" => {
                assert_eq!(v["question"], "offer");
                break;
            }
            other => panic!("unexpected status {other}"),
        }
    }
    let view = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await.json();
    assert_eq!(view["phase"], "break");
    assert_eq!(view["experimental"]["done"], 1);

    let r = c.post(&h, "break", Some(json!({"answer": "maybe"}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = c.post(&h, "break", Some(json!({"answer": "yes"}))).await.json();
    assert_eq!(r["question"], "stretch");
    let r = c.post(&h, "break", Some(json!({"answer": true}))).await.json();
    assert_eq!(r["stretched"], true);
    assert_eq!(r["question"], "ready");
    let r = c.post(&h, "break", Some(json!({"answer": "y"}))).await.json();
    assert_eq!(r["resumed"], true);
    assert_eq!(c.trial(&h).await.json()["status"], "trial");

    let r = c.post(&h, "break", Some(json!({"answer": true}))).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[test]
fn session_dirs_are_separate() {
    fn count(p: &Path) -> usize {
        std::fs::read_dir(p).map(|d| d.count()).unwrap_or(0)
    }
    let rt = tokio::runtime::Runtime::new().unwrap();
    let h = harness();
    rt.block_on(async {
        Client::create(&h, "A", "plain").await;
        Client::create(&h, "A", "plain").await;
    });
    assert_eq!(count(&h.data), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_retries_log_one_response() {
    let h = harness();
    let c = Client::create(&h, "P12", "plain").await;
    let m = c.manifest(&h);
    c.post(&h, "begin", None).await;
    let spec = spec_of(&m, &c.trial(&h).await.json()).clone();
    let mut body = answer(&spec, true);
    body["request_id"] = json!("same");

    let uri = format!("/v1/sessions/{}/responses", c.id);
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let (app, uri, token, body) = (h.app.clone(), uri.clone(), c.token.clone(), body.clone());
            tokio::spawn(async move { call(&app, Method::POST, &uri, Some(&token), Some(body)).await })
        })
        .collect();
    let mut fresh = 0;
    for t in tasks {
        let r = t.await.unwrap();
        assert_eq!(r.status, StatusCode::OK);
        if r.json()["replayed"] == false {
            fresh += 1;
        }
    }
    assert_eq!(fresh, 1);
    let view = call(&h.app, Method::GET, &format!("/v1/sessions/{}", c.id), None, None).await.json();
    assert_eq!(view["training"]["done"], 1);
    let log = std::fs::read_to_string(h.data.join(&c.id).join("events.jsonl")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains(r#""type":"response""#)).count(), 1);
}
