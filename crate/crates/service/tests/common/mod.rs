#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use teachqa::api::{self, AppState};
use teachqa_core::engine::{ReasoningBackend, SymbolicBackend, SymbolicKb};
use teachqa_core::{ControllerConfig, MemoryHandle};
use tower::ServiceExt;

pub const PENNY: &str = "Can a magnet attract a penny?";

pub fn penny_backend() -> Arc<dyn ReasoningBackend> {
    Arc::new(SymbolicBackend::new(SymbolicKb::penny_fixture()))
}

pub fn app_state(backend: Arc<dyn ReasoningBackend>) -> Arc<AppState> {
    Arc::new(AppState::new(MemoryHandle::default(), backend, ControllerConfig::default()))
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

pub fn router(state: Arc<AppState>) -> Router {
    api::router(state)
}

/// Replaces run-specific values so snapshots are stable.
pub fn redact(mut v: Value) -> Value {
    fn walk(v: &mut Value) {
        match v {
            Value::Object(map) => {
                for (k, x) in map.iter_mut() {
                    if k == "session_id" {
                        *x = Value::String("<session>".into());
                    } else {
                        walk(x);
                    }
                }
            }
            Value::Array(xs) => xs.iter_mut().for_each(walk),
            _ => {}
        }
    }
    walk(&mut v);
    v
}

/// Compares against `tests/golden/<name>.json`; `UPDATE_GOLDEN=1` rewrites it.
pub fn assert_golden(name: &str, actual: &Value) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    let actual = redact(actual.clone());
    let pretty = serde_json::to_string_pretty(&actual).unwrap() + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, pretty).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing snapshot {}; run with UPDATE_GOLDEN=1", path.display()));
    let expected: Value = serde_json::from_str(&expected).unwrap();
    assert_eq!(actual, expected, "snapshot {name} differs; run with UPDATE_GOLDEN=1 to accept");
}

/// Serves `app` on an ephemeral localhost port from a background runtime.
pub fn spawn_server(app: Router) -> std::net::SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}
