//! HTTP API over a dataset snapshot.
//!
//! | endpoint | parameters |
//! |---|---|
//! | `GET /api/meta` | |
//! | `GET /api/sites` | `bbox=w,s,e,n`, `bin`, `zoom`, `limit` |
//! | `GET /api/cloud` | `lat`, `lon`, `bin`, `max_tags`, `layout=1`, `zoom` |
//! | `GET /api/spark` | `lat`, `lon`, `phrase` |
//!
//! All bodies are JSON. Requests are answered from an immutable snapshot
//! that [`AppState::swap`] replaces atomically.

pub mod api;
pub mod encode;

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use geotext_core::store::{Store, StoreError};
use tower_http::compression::CompressionLayer;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use api::{ApiError, Params};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
    pub cloud_radius: f64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            cors_origin: None,
            cloud_radius: api::DEFAULT_CLOUD_RADIUS,
        }
    }
}

pub struct AppState {
    snapshot: RwLock<Option<Arc<Store>>>,
    dataset_dir: Option<PathBuf>,
    config: ServerConfig,
}

impl AppState {
    /// A state with no dataset; data endpoints answer 503 until
    /// [`AppState::swap`] is called.
    pub fn empty(config: ServerConfig) -> Self {
        Self {
            snapshot: RwLock::new(None),
            dataset_dir: None,
            config,
        }
    }

    pub fn with_store(store: Store, config: ServerConfig) -> Self {
        let s = Self::empty(config);
        s.swap(store);
        s
    }

    /// Loads `dir` and remembers it for [`AppState::reload`].
    pub fn open(dir: &Path, config: ServerConfig) -> Result<Self, StoreError> {
        let mut s = Self::with_store(Store::open(dir)?, config);
        s.dataset_dir = Some(dir.to_path_buf());
        Ok(s)
    }

    pub fn swap(&self, store: Store) {
        *self.snapshot.write().expect("snapshot lock") = Some(Arc::new(store));
    }

    /// Re-reads the dataset directory. On error the current snapshot stays.
    pub fn reload(&self) -> Result<(), StoreError> {
        if let Some(dir) = &self.dataset_dir {
            self.swap(Store::open(dir)?);
        }
        Ok(())
    }

    pub fn current(&self) -> Option<Arc<Store>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn answer(state: &AppState, f: impl FnOnce(&Store) -> Result<String, ApiError>) -> Response {
    let Some(store) = state.current() else {
        let e = ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            message: "no dataset loaded".into(),
        };
        return json(e.status, e.body());
    };
    match f(&store) {
        Ok(body) => json(StatusCode::OK, body),
        Err(e) => json(e.status, e.body()),
    }
}

async fn meta(State(state): State<Arc<AppState>>) -> Response {
    answer(&state, |s| Ok(api::meta_body(s)))
}

async fn sites(State(state): State<Arc<AppState>>, Query(params): Query<Params>) -> Response {
    answer(&state, |s| api::sites_body(s, &params))
}

async fn cloud(State(state): State<Arc<AppState>>, Query(params): Query<Params>) -> Response {
    let radius = state.config.cloud_radius;
    answer(&state, |s| api::cloud_body(s, &params, radius))
}

async fn spark(State(state): State<Arc<AppState>>, Query(params): Query<Params>) -> Response {
    answer(&state, |s| api::spark_body(s, &params))
}

pub fn router(state: Arc<AppState>) -> Router {
    let origin = match state.config.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(v)) => AllowOrigin::exact(v),
        _ => AllowOrigin::from(Any),
    };
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/sites", get(sites))
        .route("/api/cloud", get(cloud))
        .route("/api/spark", get(spark))
        .layer(CompressionLayer::new())
        .layer(CorsLayer::new().allow_origin(origin).allow_methods(Any))
        .with_state(state)
}

/// Serves until the listener fails or `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
