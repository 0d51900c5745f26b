//! JSON HTTP API over a workspace of pipeline runs, for the interactive
//! viewer. A workspace is a directory whose subdirectories (or itself) hold
//! datasets written by the pipeline; each is addressed by its directory
//! name.
//!
//! Barcodes are addressed as `dataset:label:index:degree`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use stablerank_core::{
    contour_lines, pointwise_mean, stable_rank, stable_rank_2d, Barcode, Contour, ExtendedReal,
};
use tower_http::services::ServeDir;

use crate::dataset::{Dataset, DatasetIndex, INDEX_FILE};

pub const WORKSPACE_ENV: &str = "STABLERANK_WORKSPACE";

/// Per-request caps so a single call cannot tie up the server.
pub const MAX_BARCODES: usize = 10_000;
pub const MAX_LINE_SAMPLES: usize = 10_000;
pub const MAX_LINES: usize = 1_000;
pub const MAX_ALPHAS: usize = 1_000;

#[derive(Debug, Default)]
pub struct Workspace {
    pub datasets: BTreeMap<String, Dataset>,
}

impl Workspace {
    /// Loads `root` itself if it is a dataset, plus every immediate
    /// subdirectory that is one. A missing or empty workspace is an error
    /// only if `root` does not exist.
    pub fn load(root: &Path) -> Result<Self> {
        let mut datasets = BTreeMap::new();
        if root.join(INDEX_FILE).is_file() {
            let id = root
                .canonicalize()?
                .file_name()
                .map_or_else(|| "workspace".into(), |n| n.to_string_lossy().into_owned());
            datasets.insert(id, Dataset::load(root)?);
        }
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
            .with_context(|| format!("reading workspace {}", root.display()))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.join(INDEX_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let id = dir.file_name().unwrap().to_string_lossy().into_owned();
            let dataset = Dataset::load(&dir).with_context(|| format!("loading dataset {id}"))?;
            datasets.insert(id, dataset);
        }
        Ok(Self { datasets })
    }

    fn barcode(&self, id: &str) -> Result<&Barcode, ApiError> {
        let parts: Vec<&str> = id.split(':').collect();
        let [dataset, label, index, degree] = parts[..] else {
            return Err(ApiError::bad_request(format!(
                "barcode id {id:?} must look like dataset:label:index:degree"
            )));
        };
        let index: usize = index.parse().map_err(|_| {
            ApiError::bad_request(format!("index {index:?} in {id:?} is not a number"))
        })?;
        let degree: usize = degree.parse().map_err(|_| {
            ApiError::bad_request(format!("degree {degree:?} in {id:?} is not a number"))
        })?;
        let ds = self.dataset(dataset)?;
        let class = ds.class(label).ok_or_else(|| {
            ApiError::not_found(format!("dataset {dataset} has no class {label:?}"))
        })?;
        let bars = class.barcodes.get(&degree).ok_or_else(|| {
            ApiError::not_found(format!("dataset {dataset} has no degree {degree}"))
        })?;
        bars.get(index).ok_or_else(|| {
            ApiError::not_found(format!(
                "class {label} has {} samples, no index {index}",
                bars.len()
            ))
        })
    }

    fn dataset(&self, id: &str) -> Result<&Dataset, ApiError> {
        self.datasets
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("no dataset {id:?}")))
    }
}

/// Error body: `{"error": {"status": 400, "message": "..."}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }
}

impl From<stablerank_core::Error> for ApiError {
    fn from(e: stablerank_core::Error) -> Self {
        Self::bad_request(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "error": { "status": self.status.as_u16(), "message": self.message }
        });
        (self.status, json_body(body.to_string())).into_response()
    }
}

fn json_body(text: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], text)
}

/// Serializes exactly like the CLI does, so outputs can be compared byte
/// for byte.
fn ok_json<T: Serialize>(value: &T) -> Result<Response, ApiError> {
    let text = serde_json::to_string(value).map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
    })?;
    Ok(json_body(text).into_response())
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

type AppState = Arc<Workspace>;

type Resolved = (Contour, Vec<Barcode>, Option<Vec<ExtendedReal>>);

/// All routes; `static_dir` (the built viewer) is served for other paths.
pub fn router(workspace: Workspace, static_dir: Option<&Path>) -> Router {
    let app = Router::new()
        .route(
            "/health",
            get(|| async { json_body(r#"{"status":"ok"}"#.to_string()) }),
        )
        .route("/datasets", get(list_datasets))
        .route("/barcodes/{id}", get(get_barcode))
        .route("/contour/lines", post(post_contour_lines))
        .route("/stablerank", post(post_stable_rank))
        .route("/stablerank2d", post(post_stable_rank_2d))
        .route("/means", post(post_means))
        .with_state(Arc::new(workspace));
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(|| async { ApiError::not_found("no such endpoint") }),
    }
}

pub async fn serve(workspace: Workspace, static_dir: Option<&Path>, addr: &str) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    eprintln!("[stablerank] serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(workspace, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Runs CPU-bound work off the async executor.
async fn compute<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
    })?
}

#[derive(Serialize)]
struct DatasetEntry<'a> {
    id: &'a str,
    #[serde(flatten)]
    index: DatasetIndex,
}

async fn list_datasets(State(ws): State<AppState>) -> Result<Response, ApiError> {
    let entries: Vec<DatasetEntry> = ws
        .datasets
        .iter()
        .map(|(id, ds)| DatasetEntry {
            id,
            index: ds.index(),
        })
        .collect();
    ok_json(&entries)
}

async fn get_barcode(
    State(ws): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    ok_json(ws.barcode(&id)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourLinesRequest {
    pub contour: Contour,
    pub ts: Vec<f64>,
    pub s_range: (f64, f64),
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    50
}

async fn post_contour_lines(body: Bytes) -> Result<Response, ApiError> {
    let req: ContourLinesRequest = parse(&body)?;
    if req.samples > MAX_LINE_SAMPLES || req.ts.len() > MAX_LINES {
        return Err(ApiError::bad_request(format!(
            "at most {MAX_LINES} lines of {MAX_LINE_SAMPLES} samples"
        )));
    }
    let lines = compute(move || {
        Ok(contour_lines(
            &req.contour,
            &req.ts,
            req.s_range,
            req.samples,
        )?)
    })
    .await?;
    ok_json(&lines)
}

/// Barcodes given inline or by id.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableRankRequest {
    pub contour: Contour,
    #[serde(default)]
    pub barcodes: Vec<Barcode>,
    #[serde(default)]
    pub ids: Vec<String>,
    /// Only for `/stablerank2d`; defaults to each barcode's endpoint grid.
    #[serde(default)]
    pub alphas: Option<Vec<ExtendedReal>>,
}

impl StableRankRequest {
    fn resolve(mut self, ws: &Workspace) -> Result<Resolved, ApiError> {
        if self.barcodes.len() + self.ids.len() > MAX_BARCODES {
            return Err(ApiError::bad_request(format!(
                "at most {MAX_BARCODES} barcodes per request"
            )));
        }
        if self.barcodes.is_empty() && self.ids.is_empty() {
            return Err(ApiError::bad_request("give barcodes or ids"));
        }
        for id in &self.ids {
            self.barcodes.push(ws.barcode(id)?.clone());
        }
        if self.alphas.as_ref().is_some_and(|a| a.len() > MAX_ALPHAS) {
            return Err(ApiError::bad_request(format!(
                "at most {MAX_ALPHAS} alphas"
            )));
        }
        Ok((self.contour, self.barcodes, self.alphas))
    }
}

async fn post_stable_rank(State(ws): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: StableRankRequest = parse(&body)?;
    if req.alphas.is_some() {
        return Err(ApiError::bad_request("alphas belong to /stablerank2d"));
    }
    let (contour, barcodes, _) = req.resolve(&ws)?;
    let out = compute(move || {
        Ok(barcodes
            .iter()
            .map(|b| stable_rank(&contour, b))
            .collect::<Vec<_>>())
    })
    .await?;
    ok_json(&out)
}

async fn post_stable_rank_2d(
    State(ws): State<AppState>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let (contour, barcodes, alphas) = parse::<StableRankRequest>(&body)?.resolve(&ws)?;
    let out = compute(move || {
        barcodes
            .iter()
            .map(|b| stable_rank_2d(&contour, b, alphas.as_deref()).map_err(ApiError::from))
            .collect::<Result<Vec<_>, _>>()
    })
    .await?;
    ok_json(&out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeansRequest {
    pub contour: Contour,
    pub dataset: String,
    pub label: String,
    pub degree: usize,
}

async fn post_means(State(ws): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: MeansRequest = parse(&body)?;
    let ds = ws.dataset(&req.dataset)?;
    let class = ds.class(&req.label).ok_or_else(|| {
        ApiError::not_found(format!(
            "dataset {} has no class {:?}",
            req.dataset, req.label
        ))
    })?;
    let barcodes = class
        .barcodes
        .get(&req.degree)
        .ok_or_else(|| {
            ApiError::not_found(format!(
                "dataset {} has no degree {}",
                req.dataset, req.degree
            ))
        })?
        .clone();
    let contour = req.contour;
    let mean = compute(move || {
        let ranks: Vec<_> = barcodes.iter().map(|b| stable_rank(&contour, b)).collect();
        Ok(pointwise_mean(&ranks)?)
    })
    .await?;
    ok_json(&mean)
}
