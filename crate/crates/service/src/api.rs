use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use ocellens_core::catalog::{type_catalog, TypeHierarchy};
use ocellens_core::discovery::{discover_ocdfg, render_dot, DfgJson, DotOptions};
use ocellens_core::io::{read_ocel_json, write_ocel_json, ReadError};
use ocellens_core::ops::{OpError, OperationRequest};
use ocellens_core::validate::Violation;
use ocellens_core::{encode_event_type, encode_object_type, OcelLog};
use serde::{Deserialize, Serialize};

use crate::store::{SessionInfo, SessionStore, StoreError};

pub type AppState = Arc<SessionStore>;

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<Violation>>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error,
                message: message.into(),
                violations: None,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<ReadError> for ApiError {
    fn from(e: ReadError) -> Self {
        let kind = match &e {
            ReadError::JsonSyntax(_) => "JsonSyntaxError",
            ReadError::Schema(_) => "SchemaError",
            ReadError::Validation(_) => "ValidationError",
            ReadError::MalformedTypeName(_) => "MalformedTypeName",
        };
        let mut err = ApiError::new(StatusCode::BAD_REQUEST, kind, e.to_string());
        if let ReadError::Validation(report) = e {
            err.body.violations = Some(report.violations);
        }
        err
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::UnknownSession(_) => ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", msg),
            StoreError::UnknownVersion { .. } => ApiError::new(StatusCode::NOT_FOUND, "UnknownVersion", msg),
            StoreError::NothingToUndo => ApiError::new(StatusCode::CONFLICT, "NothingToUndo", msg),
            StoreError::VersionLimit(_) => ApiError::new(StatusCode::CONFLICT, "VersionLimit", msg),
            StoreError::Operation(op) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, op.kind(), msg),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub events: usize,
    pub objects: usize,
    pub e2o: usize,
    pub o2o: usize,
    pub object_types: Vec<String>,
    pub event_types: Vec<String>,
    pub catalog: TypeHierarchy,
}

impl Summary {
    pub fn of(log: &OcelLog) -> Self {
        Self {
            events: log.events.len(),
            objects: log.objects.len(),
            e2o: log.e2o.len(),
            o2o: log.o2o.len(),
            object_types: log.object_types.keys().map(encode_object_type).collect(),
            event_types: log.event_types.keys().map(encode_event_type).collect(),
            catalog: type_catalog(log),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub version: usize,
    pub summary: Summary,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub info: SessionInfo,
    pub summary: Summary,
}

#[derive(Debug, Serialize)]
pub struct AppliedOperation {
    pub version: usize,
    pub summary: Summary,
    pub dfg: DfgJson,
}

#[derive(Debug, Serialize)]
pub struct UndoResult {
    pub version: usize,
}

#[derive(Debug, Default, Deserialize)]
pub struct ViewQuery {
    pub version: Option<usize>,
    pub min_arc_frequency: Option<usize>,
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

fn threshold(q: &ViewQuery) -> Result<usize, ApiError> {
    match q.min_arc_frequency {
        Some(0) => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "BadQuery",
            "min_arc_frequency must be at least 1",
        )),
        Some(n) => Ok(n),
        None => Ok(1),
    }
}

pub async fn create_session(
    State(store): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<CreatedSession>), ApiError> {
    let created = blocking(move || {
        let log = read_ocel_json(&body)?;
        let (session_id, log) = store.create(log);
        Ok(CreatedSession {
            session_id,
            version: 0,
            summary: Summary::of(&log),
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

pub async fn get_session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    blocking(move || {
        let (info, log) = store.info(&id)?;
        Ok(Json(SessionView {
            info,
            summary: Summary::of(&log),
        }))
    })
    .await
}

pub async fn delete_session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    if store.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(StoreError::UnknownSession(id).into())
    }
}

pub async fn apply_operation(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<AppliedOperation>, ApiError> {
    blocking(move || {
        let req: OperationRequest = serde_json::from_slice(&body)
            .map_err(|e| StoreError::Operation(OpError::MalformedRequest(e.to_string())))?;
        let (version, log) = store.apply(&id, req)?;
        Ok(Json(AppliedOperation {
            version,
            summary: Summary::of(&log),
            dfg: discover_ocdfg(&log).to_json(),
        }))
    })
    .await
}

pub async fn undo(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<UndoResult>, ApiError> {
    blocking(move || Ok(Json(UndoResult { version: store.undo(&id)? }))).await
}

pub async fn get_dfg(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> Result<Json<DfgJson>, ApiError> {
    let min = threshold(&q)?;
    blocking(move || {
        let (_, log) = store.version(&id, q.version)?;
        Ok(Json(discover_ocdfg(&log).filtered(min).to_json()))
    })
    .await
}

pub async fn get_dot(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> Result<Response, ApiError> {
    let min = threshold(&q)?;
    blocking(move || {
        let (_, log) = store.version(&id, q.version)?;
        let dot = render_dot(
            &discover_ocdfg(&log),
            &DotOptions {
                min_arc_frequency: min,
                ..Default::default()
            },
        );
        Ok(([(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")], dot).into_response())
    })
    .await
}

pub async fn export_log(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> Result<Response, ApiError> {
    blocking(move || {
        let (_, log) = store.version(&id, q.version)?;
        Ok(([(header::CONTENT_TYPE, "application/json")], write_ocel_json(&log)).into_response())
    })
    .await
}
