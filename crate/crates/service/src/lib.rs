//! Read/compute HTTP API over a single threat-model session.
//!
//! Every response body is a canonical JSON document, the same documents the
//! CLI prints with `--format json`.

pub mod session;

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value};
use threatfair_core::diagnosis::{risk_report, Edit, WhatIfError};
use threatfair_core::{canonical, check, error_matrix, fairness_report, io, CauseId, ContextId};
use tower_http::cors::CorsLayer;

pub use session::{Session, Snapshot};

pub const DEFAULT_BIND: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 7341;

fn document(status: StatusCode, doc: &Value) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        canonical::to_string(doc),
    )
        .into_response()
}

fn ok(doc: &Value) -> Response {
    document(StatusCode::OK, doc)
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    document(status, &json!({"error": code, "message": message.into()}))
}

/// Builds the API router. `cors_origin` enables CORS for one origin.
pub fn router(session: Arc<Session>, cors_origin: Option<HeaderValue>) -> Router {
    let app = Router::new()
        .route("/api/model", get(get_model))
        .route("/api/report", get(get_report))
        .route("/api/matrix", get(get_matrix))
        .route("/api/risk", get(get_risk))
        .route("/api/log", get(get_log))
        .route("/api/export", get(get_export))
        .route("/api/check", post(post_check))
        .route("/api/whatif", post(post_whatif))
        .route("/api/reset", post(post_reset))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(session);
    match cors_origin {
        Some(origin) => app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        ),
        None => app,
    }
}

async fn get_model(State(session): State<Arc<Session>>) -> Response {
    ok(&io::model_document(&session.snapshot().model))
}

async fn get_report(State(session): State<Arc<Session>>) -> Response {
    ok(&fairness_report(&session.snapshot().model).to_document())
}

async fn get_matrix(State(session): State<Arc<Session>>) -> Response {
    ok(&error_matrix(&session.snapshot().model).to_document())
}

async fn get_risk(State(session): State<Arc<Session>>) -> Response {
    ok(&risk_report(&session.snapshot().model).to_document())
}

fn log_document(log: &[Edit]) -> Value {
    json!({ "edits": log.iter().map(Edit::to_document).collect::<Vec<_>>() })
}

async fn get_log(State(session): State<Arc<Session>>) -> Response {
    ok(&log_document(&session.snapshot().log))
}

async fn get_export(State(session): State<Arc<Session>>) -> Response {
    (
        StatusCode::OK,
        [
            (header::CONTENT_TYPE, "application/json"),
            (
                header::CONTENT_DISPOSITION,
                "attachment; filename=\"model.json\"",
            ),
        ],
        io::save_model(&session.snapshot().model),
    )
        .into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckRequest {
    lambda: Option<f64>,
    gamma: Option<f64>,
}

async fn post_check(State(session): State<Arc<Session>>, body: Bytes) -> Response {
    let request: CheckRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()),
    };
    let report = fairness_report(&session.snapshot().model);
    match check(&report, request.lambda, request.gamma) {
        Ok(outcome) => ok(&outcome.to_document()),
        Err(e) => error(StatusCode::BAD_REQUEST, "invalid_threshold", e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Action {
    Remove,
    Add,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    action: Action,
    cause: String,
    label: Option<String>,
    weights: Option<BTreeMap<ContextId, f64>>,
}

async fn post_whatif(State(session): State<Arc<Session>>, body: Bytes) -> Response {
    let request: WhatIfRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()),
    };
    let edit = match request.action {
        Action::Remove => Edit::Remove {
            cause: CauseId::new(request.cause),
        },
        Action::Add => {
            // Without explicit weights, a cause from the served model comes
            // back with its original weights.
            let (label, weights) = match (request.weights, session.base_cause(&request.cause)) {
                (Some(w), _) => (request.label, w),
                (None, Some((base_label, w))) => (request.label.or(base_label), w),
                (None, None) => {
                    return error(
                        StatusCode::CONFLICT,
                        "missing_weights",
                        format!(
                            "cause `{}` is not in the served model; weights are required",
                            request.cause
                        ),
                    )
                }
            };
            Edit::Add {
                cause: CauseId::new(request.cause),
                label,
                weights,
            }
        }
    };
    match session.apply(edit) {
        Ok(delta) => ok(&delta.to_document()),
        Err(e) => {
            let (status, code) = match &e {
                WhatIfError::UnknownCause(_) => (StatusCode::NOT_FOUND, "unknown_cause"),
                WhatIfError::LastCause(_) => (StatusCode::CONFLICT, "last_cause"),
                WhatIfError::DuplicateCause(_) => (StatusCode::CONFLICT, "duplicate_cause"),
                WhatIfError::MissingContextWeight(_) => {
                    (StatusCode::CONFLICT, "missing_context_weight")
                }
                WhatIfError::UnknownContext(_) => (StatusCode::CONFLICT, "unknown_context"),
                WhatIfError::Invalid(_) => (StatusCode::CONFLICT, "invalid_edit"),
            };
            error(status, code, e.to_string())
        }
    }
}

async fn post_reset(State(session): State<Arc<Session>>) -> Response {
    let snapshot = session.reset();
    ok(&json!({
        "report": fairness_report(&snapshot.model).to_document(),
        "log": log_document(&snapshot.log),
    }))
}

/// Serves `router` on `listener` until `shutdown` resolves.
pub async fn serve<F>(
    listener: tokio::net::TcpListener,
    router: Router,
    shutdown: F,
) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    tracing::info!(addr = ?listener.local_addr().ok(), "serving threat model");
    axum::serve(listener, router)
        .with_graceful_shutdown(shutdown)
        .await
}
