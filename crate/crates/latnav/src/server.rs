use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use latnav_core::metrics::PartLabeler;
use latnav_core::synthgen::{PartId, Split};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::service::{EditRequest, EditService, API_FORMAT_VERSION};
use crate::Error;

pub struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use latnav_core::Error as C;
        let status = match &e {
            Error::HashMismatch { .. } => StatusCode::CONFLICT,
            Error::Usage(_) | Error::Json(_) => StatusCode::BAD_REQUEST,
            Error::Core(C::UnknownId(_)) => StatusCode::NOT_FOUND,
            Error::Core(C::InvalidInput(_) | C::Parse(_) | C::ShapeMismatch { .. }) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?.map_err(ApiError::from)
}

#[derive(Serialize)]
struct Health {
    version: &'static str,
    format_version: u32,
    checkpoint_hash: String,
    bank_checkpoint_hash: String,
    consistent: bool,
}

async fn health(State(s): State<Arc<EditService>>) -> Json<Health> {
    Json(Health {
        version: env!("CARGO_PKG_VERSION"),
        format_version: API_FORMAT_VERSION,
        checkpoint_hash: s.checkpoint_hash.clone(),
        bank_checkpoint_hash: s.bank.checkpoint_hash.clone(),
        consistent: s.hash_mismatch().is_none(),
    })
}

#[derive(Serialize)]
struct SemanticInfo {
    id: String,
    part: Option<PartId>,
    semantic: String,
    train_acc: Option<f64>,
    heldout_acc: Option<f64>,
    dist_std: f64,
}

async fn semantics(State(s): State<Arc<EditService>>) -> ApiResult<Vec<SemanticInfo>> {
    if let Some(e) = s.hash_mismatch() {
        return Err(e.into());
    }
    Ok(Json(
        s.bank
            .directions
            .iter()
            .map(|d| SemanticInfo {
                id: d.id.clone(),
                part: d.part,
                semantic: d.semantic.clone(),
                train_acc: d.train_acc,
                heldout_acc: d.heldout_acc,
                dist_std: d.dist_std,
            })
            .collect(),
    ))
}

#[derive(Deserialize)]
struct ObjectsQuery {
    n: Option<String>,
}

#[derive(Serialize)]
struct Thumbnail {
    id: String,
    /// Decoded cloud, flat `x, y, z` triples.
    cloud: Vec<f64>,
}

/// The first `n` held-out objects with their reconstructions.
async fn objects(State(s): State<Arc<EditService>>, Query(q): Query<ObjectsQuery>) -> ApiResult<Vec<Thumbnail>> {
    let n: usize = match q.n.as_deref() {
        None => 8,
        Some(t) => t.parse().ok().filter(|&n| n > 0).ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, format!("n must be a positive integer, got {t:?}")))?,
    };
    Ok(Json(
        blocking(move || {
            let mut idx = s.dataset.indices(Split::Heldout);
            idx.extend(s.dataset.indices(Split::Train));
            idx.into_iter()
                .take(n)
                .map(|i| {
                    let cloud = s.ae.reconstruct(&s.dataset.clouds[i].unlabeled())?;
                    Ok(Thumbnail { id: s.dataset.manifest.objects[i].id.clone(), cloud: cloud.to_flat() })
                })
                .collect()
        })
        .await?,
    ))
}

#[derive(Serialize)]
struct ObjectView {
    id: String,
    split: Split,
    attributes: Vec<String>,
    cloud: Vec<f64>,
    labels: Vec<u8>,
    parts: BTreeMap<u8, PartId>,
}

async fn object(State(s): State<Arc<EditService>>, Path(id): Path<String>) -> ApiResult<ObjectView> {
    Ok(Json(
        blocking(move || {
            let cloud = s.object(&id)?.unlabeled();
            let entry = &s.dataset.manifest.objects[s.dataset.position(&id).expect("object exists")];
            Ok(ObjectView {
                id: id.clone(),
                split: entry.split,
                attributes: entry.attributes.iter().cloned().collect(),
                labels: s.segmenter.part_labels(&cloud)?,
                cloud: cloud.to_flat(),
                parts: PartId::ALL.iter().map(|p| (p.label(), *p)).collect(),
            })
        })
        .await?,
    ))
}

async fn edit(State(s): State<Arc<EditService>>, body: Bytes) -> Response {
    let req: EditRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return ApiError(StatusCode::BAD_REQUEST, format!("malformed edit request: {e}")).into_response(),
    };
    match blocking(move || s.edit(&req)).await {
        Ok(r) => Json(r).into_response(),
        Err(e) => e.into_response(),
    }
}

pub fn router(service: Arc<EditService>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/semantics", get(semantics))
        .route("/api/objects", get(objects))
        .route("/api/object/{id}", get(object))
        .route("/api/edit", post(edit))
        .with_state(service)
}

pub async fn serve(service: EditService, addr: &str) -> Result<(), Error> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
