//! Read-only HTTP API over annotated documents.
//!
//! `GET /health`, `GET /documents`, `GET /documents/{id}` (the stored file,
//! byte for byte) and `GET /documents/{id}/view?min_likes=&min_replies=&labels=`
//! (a filtered view rendered with [`AnnotatedDocument::to_json`]).

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::CorsLayer;

use crate::pipeline::{apply_filters, AnnotatedDocument, FilterSpec};

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} is not an annotated document: {message}")]
    Malformed { path: String, message: String },
    #[error("duplicate document id `{0}`")]
    Duplicate(String),
}

struct StoredDocument {
    raw: Arc<[u8]>,
    doc: AnnotatedDocument,
}

/// Immutable set of loaded documents keyed by article id.
#[derive(Default)]
pub struct DocumentRegistry {
    docs: BTreeMap<String, StoredDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct DocumentSummary {
    pub id: String,
    pub title: String,
}

impl DocumentRegistry {
    pub fn insert_bytes(&mut self, raw: Vec<u8>, origin: &str) -> Result<&AnnotatedDocument, RegistryError> {
        let text = std::str::from_utf8(&raw)
            .map_err(|e| RegistryError::Malformed { path: origin.to_string(), message: e.to_string() })?;
        let doc = AnnotatedDocument::from_json(text)
            .map_err(|e| RegistryError::Malformed { path: origin.to_string(), message: e.to_string() })?;
        let id = doc.id().to_string();
        if self.docs.contains_key(&id) {
            return Err(RegistryError::Duplicate(id));
        }
        let entry = self.docs.entry(id).or_insert(StoredDocument { raw: raw.into(), doc });
        Ok(&entry.doc)
    }

    pub fn insert_document(&mut self, doc: &AnnotatedDocument) -> Result<(), RegistryError> {
        self.insert_bytes(doc.to_json().into_bytes(), "memory").map(|_| ())
    }

    /// Loads each file, or every `*.json` file directly inside a directory.
    pub fn load_paths(paths: &[PathBuf]) -> Result<Self, RegistryError> {
        let mut registry = DocumentRegistry::default();
        for path in paths {
            if path.is_dir() {
                let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                    .map_err(|source| RegistryError::Io { path: path.display().to_string(), source })?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect();
                files.sort();
                for f in files {
                    registry.load_file(&f)?;
                }
            } else {
                registry.load_file(path)?;
            }
        }
        Ok(registry)
    }

    fn load_file(&mut self, path: &Path) -> Result<(), RegistryError> {
        let raw = std::fs::read(path).map_err(|source| RegistryError::Io { path: path.display().to_string(), source })?;
        self.insert_bytes(raw, &path.display().to_string()).map(|_| ())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn summaries(&self) -> Vec<DocumentSummary> {
        self.docs
            .values()
            .map(|d| DocumentSummary { id: d.doc.article.id.clone(), title: d.doc.article.title.clone() })
            .collect()
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
}

fn error(status: StatusCode, message: String, field: Option<&str>) -> Response {
    (status, Json(ErrorBody { error: message, field: field.map(str::to_string) })).into_response()
}

fn json_bytes(body: impl Into<axum::body::Body>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body.into()).into_response()
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn list(State(reg): State<Arc<DocumentRegistry>>) -> Json<Vec<DocumentSummary>> {
    Json(reg.summaries())
}

async fn document(State(reg): State<Arc<DocumentRegistry>>, UrlPath(id): UrlPath<String>) -> Response {
    match reg.docs.get(&id) {
        Some(d) => json_bytes(d.raw.to_vec()),
        None => error(StatusCode::NOT_FOUND, format!("unknown document `{id}`"), None),
    }
}

const VIEW_PARAMS: [&str; 3] = ["min_likes", "min_replies", "labels"];

async fn view(
    State(reg): State<Arc<DocumentRegistry>>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let Some(stored) = reg.docs.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown document `{id}`"), None);
    };
    if let Some(unknown) = params.keys().filter(|k| !VIEW_PARAMS.contains(&k.as_str())).min() {
        return error(StatusCode::BAD_REQUEST, format!("unknown query parameter `{unknown}`"), Some(unknown));
    }
    let get = |k: &str| params.get(k).map(String::as_str);
    match FilterSpec::from_params(get("min_likes"), get("min_replies"), get("labels")) {
        Ok(filter) => json_bytes(apply_filters(&stored.doc, &filter).to_json()),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string(), Some(e.field)),
    }
}

pub fn router(registry: Arc<DocumentRegistry>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/documents", get(list))
        .route("/documents/{id}", get(document))
        .route("/documents/{id}/view", get(view))
        .layer(CorsLayer::permissive())
        .with_state(registry)
}

/// Binds `addr` and serves until the process receives Ctrl-C.
pub async fn serve(addr: SocketAddr, registry: Arc<DocumentRegistry>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, registry, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    registry: Arc<DocumentRegistry>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(address = %listener.local_addr()?, documents = registry.len(), "serving");
    axum::serve(listener, router(registry)).with_graceful_shutdown(shutdown).await
}
