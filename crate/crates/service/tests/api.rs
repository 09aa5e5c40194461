use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ocellens_core::io::{read_ocel_json, write_ocel_json, RUNNING_EXAMPLE_JSON};
use ocellens_core::ops::{apply, OperationKind, OperationRequest};
use ocellens_service::{router, Config, SessionStore, StoreConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app_with(config: Config) -> Router {
    let store = Arc::new(SessionStore::new(config.store.clone()).unwrap());
    router(store, &config)
}

fn app() -> Router {
    app_with(Config::default())
}

async fn send(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn send_json(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn upload(app: &Router) -> String {
    let (status, body) = send_json(app, "POST", "/api/sessions", RUNNING_EXAMPLE_JSON).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_owned()
}

fn drill_test_type() -> Value {
    json!({"kind": "DrillDown", "object_type": "Test", "attribute": "type"})
}

fn has_arc(dfg: &Value, src: &str, tgt: &str, ot: &str) -> bool {
    dfg["arcs"].as_array().unwrap().iter().any(|a| {
        a["source"] == src && a["target"] == tgt && a["object_type"] == ot
    })
}

#[tokio::test]
async fn upload_running_example_summarises_it() {
    let app = app();
    let (status, body) = send_json(&app, "POST", "/api/sessions", RUNNING_EXAMPLE_JSON).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["version"], 0);
    assert_eq!(body["summary"]["events"], 5);
    assert_eq!(body["summary"]["objects"], 3);
    assert_eq!(body["summary"]["e2o"], 9);
    assert_eq!(body["summary"]["object_types"], json!(["Patient", "Test"]));
}

#[tokio::test]
async fn upload_empty_log_has_zero_counts() {
    let app = app();
    let (status, body) = send_json(&app, "POST", "/api/sessions", r#"{"objects":[],"events":[]}"#).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["summary"]["events"], 0);
    assert_eq!(body["summary"]["objects"], 0);
}

#[tokio::test]
async fn malformed_uploads_are_rejected() {
    let app = app();
    let (status, body) = send_json(&app, "POST", "/api/sessions", "{ not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "JsonSyntaxError");

    let dangling = r#"{"objects":[],"events":[{"id":"e1","type":"a","time":"2024-01-01T00:00:00Z",
        "relationships":[{"objectId":"ghost","qualifier":"q"}]}]}"#;
    let (status, body) = send_json(&app, "POST", "/api/sessions", dangling).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "ValidationError");
    assert!(!body["violations"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn oversized_uploads_get_413() {
    let app = app_with(Config {
        max_upload_bytes: 64,
        ..Config::default()
    });
    let (status, _) = send(&app, "POST", "/api/sessions", RUNNING_EXAMPLE_JSON).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn drill_down_returns_new_version_and_dfg() {
    let app = app();
    let id = upload(&app).await;
    let uri = format!("/api/sessions/{id}/operations");
    let (status, body) = send_json(&app, "POST", &uri, drill_test_type().to_string()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"], 1);
    assert!(has_arc(&body["dfg"], "ot", "rt", "Test~type=ECG"));
    assert!(has_arc(&body["dfg"], "ot", "rt", "Test~type=Blood"));

    let (_, info) = send_json(&app, "GET", &format!("/api/sessions/{id}"), Body::empty()).await;
    assert_eq!(info["version"], 1);
    assert_eq!(info["history"][0]["kind"], "DrillDown");
}

#[tokio::test]
async fn failed_operations_get_422_and_create_no_version() {
    let app = app();
    let id = upload(&app).await;
    let uri = format!("/api/sessions/{id}/operations");
    let bad = json!({"kind": "DrillDown", "object_type": "Nope", "attribute": "type"});
    let (status, body) = send_json(&app, "POST", &uri, bad.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "UnknownObjectType");

    let (status, body) = send_json(&app, "POST", &uri, r#"{"kind":"Teleport"}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "MalformedRequest");

    let (_, info) = send_json(&app, "GET", &format!("/api/sessions/{id}"), Body::empty()).await;
    assert_eq!(info["version"], 0);
}

#[tokio::test]
async fn fold_of_missing_composite_appends_equal_version() {
    let app = app();
    let id = upload(&app).await;
    let fold = json!({"kind": "Fold", "event_type": "ot", "object_type": "Nope"});
    let (status, body) = send_json(&app, "POST", &format!("/api/sessions/{id}/operations"), fold.to_string()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], 1);
    let (_, v0) = send(&app, "GET", &format!("/api/sessions/{id}/log?version=0"), Body::empty()).await;
    let (_, v1) = send(&app, "GET", &format!("/api/sessions/{id}/log?version=1"), Body::empty()).await;
    assert_eq!(v0, v1);
}

#[tokio::test]
async fn unknown_sessions_get_404() {
    let app = app();
    for (method, path) in [
        ("GET", "/api/sessions/nope"),
        ("DELETE", "/api/sessions/nope"),
        ("POST", "/api/sessions/nope/undo"),
        ("GET", "/api/sessions/nope/dfg"),
        ("GET", "/api/sessions/nope/dot"),
        ("GET", "/api/sessions/nope/log"),
    ] {
        let (status, _) = send(&app, method, path, Body::empty()).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{method} {path}");
    }
    let (status, _) = send(&app, "POST", "/api/sessions/nope/operations", drill_test_type().to_string()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn undo_restores_previous_version() {
    let app = app();
    let id = upload(&app).await;
    let undo = format!("/api/sessions/{id}/undo");
    let (status, _) = send(&app, "POST", &undo, Body::empty()).await;
    assert_eq!(status, StatusCode::CONFLICT);

    send(&app, "POST", &format!("/api/sessions/{id}/operations"), drill_test_type().to_string()).await;
    let (status, body) = send_json(&app, "POST", &undo, Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], 0);
    let (_, exported) = send(&app, "GET", &format!("/api/sessions/{id}/log"), Body::empty()).await;
    let original = read_ocel_json(RUNNING_EXAMPLE_JSON.as_bytes()).unwrap();
    assert_eq!(exported, write_ocel_json(&original));
}

#[tokio::test]
async fn reapplying_after_undo_is_deterministic() {
    let app = app();
    let id = upload(&app).await;
    let ops = format!("/api/sessions/{id}/operations");
    let unfold = json!({"kind": "Unfold", "event_type": "ot", "object_type": "Test"});
    send(&app, "POST", &ops, drill_test_type().to_string()).await;
    send(&app, "POST", &ops, unfold.to_string()).await;
    let (_, once) = send(&app, "GET", &format!("/api/sessions/{id}/log"), Body::empty()).await;
    send(&app, "POST", &format!("/api/sessions/{id}/undo"), Body::empty()).await;
    send(&app, "POST", &ops, unfold.to_string()).await;
    let (_, again) = send(&app, "GET", &format!("/api/sessions/{id}/log"), Body::empty()).await;
    assert_eq!(once, again);
}

#[tokio::test]
async fn version_cap_gives_409() {
    let app = app_with(Config {
        store: StoreConfig {
            max_versions: 2,
            ..StoreConfig::default()
        },
        ..Config::default()
    });
    let id = upload(&app).await;
    let ops = format!("/api/sessions/{id}/operations");
    let (status, _) = send(&app, "POST", &ops, drill_test_type().to_string()).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = send_json(&app, "POST", &ops, drill_test_type().to_string()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "VersionLimit");
}

#[tokio::test]
async fn dfg_and_dot_follow_version_and_threshold() {
    let app = app();
    let id = upload(&app).await;
    send(&app, "POST", &format!("/api/sessions/{id}/operations"), drill_test_type().to_string()).await;

    let (status, v0) = send_json(&app, "GET", &format!("/api/sessions/{id}/dfg?version=0"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(has_arc(&v0, "ot", "rt", "Test"));
    let (_, head) = send_json(&app, "GET", &format!("/api/sessions/{id}/dfg"), Body::empty()).await;
    assert!(!has_arc(&head, "ot", "rt", "Test"));
    assert!(has_arc(&head, "ot", "rt", "Test~type=ECG"));

    let (_, filtered) =
        send_json(&app, "GET", &format!("/api/sessions/{id}/dfg?version=0&min_arc_frequency=2"), Body::empty()).await;
    assert!(has_arc(&filtered, "ot", "rt", "Test"));
    assert!(has_arc(&filtered, "ot", "rt", "Patient"));
    assert!(!has_arc(&filtered, "rt", "ot", "Patient"));

    let (status, _) = send(&app, "GET", &format!("/api/sessions/{id}/dfg?min_arc_frequency=0"), Body::empty()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, "GET", &format!("/api/sessions/{id}/dfg?version=7"), Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, dot) = send(&app, "GET", &format!("/api/sessions/{id}/dot"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let dot = String::from_utf8(dot).unwrap();
    assert!(dot.starts_with("digraph ocdfg {"));
    assert!(dot.contains("Test~type=ECG"));
}

#[tokio::test]
async fn export_of_drilled_version_contains_composite_type() {
    let app = app();
    let id = upload(&app).await;
    send(&app, "POST", &format!("/api/sessions/{id}/operations"), drill_test_type().to_string()).await;
    let (status, bytes) = send(&app, "GET", &format!("/api/sessions/{id}/log"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(bytes).unwrap().contains("Test~type=ECG"));
}

#[tokio::test]
async fn sessions_do_not_see_each_other() {
    let app = app();
    let a = upload(&app).await;
    let b = upload(&app).await;
    send(&app, "POST", &format!("/api/sessions/{a}/operations"), drill_test_type().to_string()).await;
    let (_, info) = send_json(&app, "GET", &format!("/api/sessions/{b}"), Body::empty()).await;
    assert_eq!(info["version"], 0);
    let (status, _) = send(&app, "DELETE", &format!("/api/sessions/{a}"), Body::empty()).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = send(&app, "GET", &format!("/api/sessions/{b}"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn concurrent_operations_on_one_session_serialize() {
    let app = app();
    let id = upload(&app).await;
    let ops = format!("/api/sessions/{id}/operations");
    let unfolds = ["Patient", "Test"].map(|ot| json!({"kind": "Unfold", "event_type": "ot", "object_type": ot}));
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let (app, ops, body) = (app.clone(), ops.clone(), unfolds[i % 2].to_string());
            tokio::spawn(async move { send(&app, "POST", &ops, body).await.0 })
        })
        .collect();
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let (_, info) = send_json(&app, "GET", &format!("/api/sessions/{id}"), Body::empty()).await;
    assert_eq!(info["version"], 8);
}

#[tokio::test]
async fn state_dir_sessions_survive_restart_by_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config {
        store: StoreConfig {
            state_dir: Some(dir.path().to_path_buf()),
            ..StoreConfig::default()
        },
        ..Config::default()
    };
    let app = app_with(config.clone());
    let id = upload(&app).await;
    send(&app, "POST", &format!("/api/sessions/{id}/operations"), drill_test_type().to_string()).await;
    let (_, before) = send(&app, "GET", &format!("/api/sessions/{id}/log"), Body::empty()).await;
    drop(app);

    let restarted = app_with(config);
    let (status, after) = send(&restarted, "GET", &format!("/api/sessions/{id}/log"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);

    let req = OperationRequest {
        kind: OperationKind::DrillDown,
        object_type: Some("Test".into()),
        attribute: Some("type".into()),
        event_type: None,
        qualifiers: None,
    };
    let replayed = apply(&read_ocel_json(RUNNING_EXAMPLE_JSON.as_bytes()).unwrap(), &req).unwrap();
    assert_eq!(after, write_ocel_json(&replayed));
}

#[tokio::test]
async fn root_serves_ui_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>explorer</h1>").unwrap();
    let with_ui = app_with(Config {
        ui_dir: Some(dir.path().to_path_buf()),
        ..Config::default()
    });
    let (status, body) = send(&with_ui, "GET", "/", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<h1>explorer</h1>");

    let (status, _) = send(&app(), "GET", "/", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
}
