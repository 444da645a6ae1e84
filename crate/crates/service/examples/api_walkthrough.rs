//! Drive the HTTP API in-process: create a plain and an embodied session
//! for one participant, answer the training trials and print what a
//! client would see.
//!
//! cargo run -p crm-service --example api_walkthrough

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use crm_core::stimulus::{Corpus, Manifest, MANIFEST_FILE};
use crm_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (u16, Value) {
    let mut req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    if let Some(t) = token {
        req = req.header("x-session-token", t);
    }
    let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = tempfile::tempdir()?;
    Corpus::synthetic(1, 22_050).write_dir(root.path().join("corpus/en"))?;
    let config = ServiceConfig::new(root.path().join("corpus"), root.path().join("data"));
    let data = config.data_dir.clone();
    let app = router(Arc::new(AppState::new(config)));

    println!("{:?}", call(&app, Method::GET, "/v1/languages", None, None).await);
    let (status, err) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        None,
        Some(json!({"participant": "P01", "language": "de", "interface": "plain"})),
    )
    .await;
    println!("unknown language -> {status} {err}");

    for interface in ["plain", "embodied"] {
        let (status, handle) = call(
            &app,
            Method::POST,
            "/v1/sessions",
            None,
            Some(json!({"participant": "P01", "language": "en", "interface": interface})),
        )
        .await;
        let id = handle["session_id"].as_str().unwrap().to_string();
        let token = handle["token"].as_str().unwrap().to_string();
        println!("\n{interface}: created {id} ({status}), phase {}", handle["state"]["phase"]);
        // The client never sees the answers; this example peeks at the manifest to play along.
        let manifest = Manifest::read(data.join(&id).join(MANIFEST_FILE))?;

        call(&app, Method::POST, &format!("/v1/sessions/{id}/begin"), Some(&token), None).await;
        loop {
            let (_, trial) = call(&app, Method::GET, &format!("/v1/sessions/{id}/trial"), Some(&token), None).await;
            if trial["status"] != "trial" {
                println!("  next: {trial}");
                break;
            }
            let index = trial["index"].as_u64().unwrap() as usize;
            let spec = manifest.training().find(|t| t.index == index).unwrap();
            let number = if index % 2 == 1 { spec.target.number.value() } else { spec.target.number.value() % 8 + 1 };
            let (_, outcome) = call(
                &app,
                Method::POST,
                &format!("/v1/sessions/{id}/responses"),
                Some(&token),
                Some(json!({"color": spec.target.color.as_str(), "number": number})),
            )
            .await;
            println!("  trial {index}: {trial}\n    -> correct {} feedback {}", outcome["correct"], outcome["feedback"]);
        }
        let by = if interface == "embodied" { "head_touch" } else { "researcher" };
        let (_, view) = call(&app, Method::POST, &format!("/v1/sessions/{id}/confirm"), Some(&token), Some(json!({"by": by}))).await;
        println!("  confirmed by {by}: phase {}, experimental {}", view["phase"], view["experimental"]);
    }
    Ok(())
}
