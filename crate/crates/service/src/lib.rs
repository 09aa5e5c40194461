//! HTTP session service behind the interactive explorer.
//!
//! A session holds the uploaded log as version 0 and one immutable snapshot
//! per applied operation. Undo pops the newest snapshot.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/sessions` | upload an OCEL 2.0 JSON log |
//! | GET, DELETE | `/api/sessions/{id}` | session info / drop session |
//! | POST | `/api/sessions/{id}/operations` | apply an operation |
//! | POST | `/api/sessions/{id}/undo` | drop the newest version |
//! | GET | `/api/sessions/{id}/dfg` | OC-DFG as JSON (`version`, `min_arc_frequency`) |
//! | GET | `/api/sessions/{id}/dot` | OC-DFG as Graphviz DOT |
//! | GET | `/api/sessions/{id}/log` | canonical OCEL 2.0 JSON of a version |

pub mod api;
pub mod persist;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::DefaultBodyLimit;
use axum::response::Html;
use axum::routing::{get, post};
use axum::Router;
use thiserror::Error;
use tower_http::services::ServeDir;

pub use store::{SessionStore, StoreConfig, StoreError};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8787";
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct Config {
    pub addr: SocketAddr,
    pub max_upload_bytes: usize,
    pub ui_dir: Option<PathBuf>,
    pub store: StoreConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            addr: DEFAULT_ADDR.parse().unwrap(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            ui_dir: None,
            store: StoreConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{var}: {message}")]
    Invalid { var: &'static str, message: String },
}

impl Config {
    /// Reads `OCELLENS_ADDR`, `OCELLENS_MAX_UPLOAD_BYTES`, `OCELLENS_STATE_DIR`
    /// and `OCELLENS_UI_DIR`, falling back to defaults for unset variables.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        if let Some(addr) = lookup("OCELLENS_ADDR") {
            cfg.addr = addr.parse().map_err(|e| ConfigError::Invalid {
                var: "OCELLENS_ADDR",
                message: format!("{addr:?}: {e}"),
            })?;
        }
        if let Some(n) = lookup("OCELLENS_MAX_UPLOAD_BYTES") {
            cfg.max_upload_bytes = n.parse().map_err(|e| ConfigError::Invalid {
                var: "OCELLENS_MAX_UPLOAD_BYTES",
                message: format!("{n:?}: {e}"),
            })?;
        }
        cfg.store.state_dir = lookup("OCELLENS_STATE_DIR").filter(|s| !s.is_empty()).map(PathBuf::from);
        cfg.ui_dir = lookup("OCELLENS_UI_DIR").filter(|s| !s.is_empty()).map(PathBuf::from);
        Ok(cfg)
    }
}

const PLACEHOLDER_INDEX: &str = "<!doctype html><title>ocellens</title>\
<p>The explorer UI is not installed. Set <code>OCELLENS_UI_DIR</code> to its build directory. \
The JSON API is available under <code>/api/sessions</code>.</p>";

pub fn router(store: Arc<SessionStore>, config: &Config) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(api::create_session))
        .route(
            "/api/sessions/{id}",
            get(api::get_session).delete(api::delete_session),
        )
        .route("/api/sessions/{id}/operations", post(api::apply_operation))
        .route("/api/sessions/{id}/undo", post(api::undo))
        .route("/api/sessions/{id}/dfg", get(api::get_dfg))
        .route("/api/sessions/{id}/dot", get(api::get_dot))
        .route("/api/sessions/{id}/log", get(api::export_log))
        .layer(DefaultBodyLimit::max(config.max_upload_bytes))
        .with_state(store);
    match &config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_INDEX) })),
    }
}

/// Binds `config.addr` and serves until the process is stopped.
pub async fn serve(config: Config) -> std::io::Result<()> {
    let store = Arc::new(SessionStore::new(config.store.clone())?);
    let reaper = store.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let n = reaper.evict_expired(chrono::Utc::now());
            if n > 0 {
                tracing::info!("evicted {n} idle session(s)");
            }
        }
    });
    let app = router(store, &config);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}
