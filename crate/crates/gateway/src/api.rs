//! HTTP routes. Dataset work runs on the blocking pool; handlers only
//! translate between query strings and the dataset/store calls.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use seglab_core::annotation::{entry_to_canonical_json, parse_entry, EpisodeEntry};
use seglab_core::config::ToolConfig;
use seglab_core::model::{Episode, Seconds};
use seglab_core::sync::{downsample_window, nearest_index, SeriesWindow};
use seglab_formats::Dataset;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::{ApiError, ApiResult, OpenError};
use crate::store::{AnnotationStore, StoreError};

pub const DEFAULT_MAX_POINTS: usize = 2000;

#[derive(Clone)]
pub struct AppState {
    pub dataset: Arc<Dataset>,
    pub store: Arc<AnnotationStore>,
}

impl AppState {
    /// Opens the dataset and the annotation file named by `config`.
    pub fn open(config: ToolConfig) -> Result<Self, OpenError> {
        let store = AnnotationStore::open(config.annotation_file(), &config.dataset_name(), &config.annotator_id)?;
        let dataset = Dataset::open(config)?;
        Ok(Self {
            dataset: Arc::new(dataset),
            store: Arc::new(store),
        })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/config", get(config))
        .route("/api/episodes", get(episodes))
        .route("/api/episodes/:id/meta", get(meta))
        .route("/api/episodes/:id/frame", get(frame))
        .route("/api/episodes/:id/series", get(series))
        .route("/api/episodes/:id/annotations", get(get_annotations).put(put_annotations))
        .with_state(state)
}

/// API routes plus the UI's static files at `/`.
pub fn router_with_ui(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    match ui_dir {
        Some(dir) => router(state).fallback_service(ServeDir::new(dir)),
        None => router(state),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn load(state: &AppState, id: String) -> ApiResult<Arc<Episode>> {
    let ds = state.dataset.clone();
    blocking(move || Ok(ds.load_episode(&id)?)).await
}

async fn config(State(state): State<AppState>) -> Json<ToolConfig> {
    Json(state.dataset.config().clone())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EpisodeItem {
    pub id: String,
    /// `null` until the episode has been loaded, for formats whose index does
    /// not record durations.
    pub duration: Option<Seconds>,
}

async fn episodes(State(state): State<AppState>) -> Json<Vec<EpisodeItem>> {
    Json(
        state
            .dataset
            .episodes()
            .into_iter()
            .map(|e| EpisodeItem { id: e.id, duration: e.duration })
            .collect(),
    )
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CameraMeta {
    pub name: String,
    pub frames: usize,
    pub first: Seconds,
    pub last: Seconds,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ChannelMeta {
    pub name: String,
    pub unit: String,
    pub dims: usize,
    pub dim_labels: Vec<String>,
    pub samples: usize,
    pub default_visible: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EpisodeMeta {
    pub id: String,
    pub duration: Seconds,
    pub description: Option<String>,
    pub cameras: Vec<CameraMeta>,
    pub channels: Vec<ChannelMeta>,
}

pub fn episode_meta(ep: &Episode, config: &ToolConfig) -> EpisodeMeta {
    EpisodeMeta {
        id: ep.id.clone(),
        duration: ep.duration,
        description: ep.description.clone(),
        cameras: ep
            .cameras
            .iter()
            .map(|c| CameraMeta {
                name: c.name.clone(),
                frames: c.frame_count(),
                first: c.frame_timestamps.first().copied().unwrap_or(0.0),
                last: c.frame_timestamps.last().copied().unwrap_or(0.0),
            })
            .collect(),
        channels: ep
            .channels
            .iter()
            .map(|c| ChannelMeta {
                name: c.name.clone(),
                unit: c.unit.clone(),
                dims: c.dims(),
                dim_labels: c.dim_labels.clone(),
                samples: c.len(),
                default_visible: config.channels.iter().find(|d| d.name == c.name).is_none_or(|d| d.default_visible),
            })
            .collect(),
    }
}

async fn meta(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<EpisodeMeta>> {
    let ep = load(&state, id).await?;
    Ok(Json(episode_meta(&ep, state.dataset.config())))
}

#[derive(Debug, Deserialize)]
pub struct FrameQuery {
    pub camera: String,
    pub t: Seconds,
}

async fn frame(State(state): State<AppState>, Path(id): Path<String>, q: Result<Query<FrameQuery>, QueryRejection>) -> ApiResult<Response> {
    let q = query(q)?;
    let ds = state.dataset.clone();
    let (index, time, frame) = blocking(move || {
        let ep = ds.load_episode(&id)?;
        let cam = ep
            .camera(&q.camera)
            .ok_or_else(|| ApiError::NotFound(format!("episode {id:?} has no camera {:?}", q.camera)))?;
        // same clamping and tie rule as every other time lookup
        let index = nearest_index(&cam.frame_timestamps, q.t).map_err(|e| ApiError::BadRequest(e.to_string()))?;
        let time = cam.frame_timestamps[index];
        Ok((index, time, ds.frame(&id, &q.camera, index)?))
    })
    .await?;
    let (mime, bytes) = frame.to_web().map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, mime.to_string()),
            (header::HeaderName::from_static("x-frame-index"), index.to_string()),
            (header::HeaderName::from_static("x-frame-time"), time.to_string()),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
pub struct SeriesQuery {
    pub channel: String,
    pub from: Option<Seconds>,
    pub to: Option<Seconds>,
    pub max_points: Option<usize>,
}

async fn series(State(state): State<AppState>, Path(id): Path<String>, q: Result<Query<SeriesQuery>, QueryRejection>) -> ApiResult<Json<SeriesWindow>> {
    let q = query(q)?;
    let ep = load(&state, id.clone()).await?;
    let ch = ep
        .channel(&q.channel)
        .ok_or_else(|| ApiError::NotFound(format!("episode {id:?} has no channel {:?}", q.channel)))?;
    let from = q.from.unwrap_or(0.0);
    let to = q.to.unwrap_or(if ep.duration > from { ep.duration } else { from + 1.0 });
    let window = downsample_window(ch, from, to, q.max_points.unwrap_or(DEFAULT_MAX_POINTS)).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(window))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn get_annotations(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let ep = load(&state, id.clone()).await?;
    let entry = state.store.get(&id).unwrap_or_else(|| EpisodeEntry {
        description: ep.description.clone(),
        segments: Vec::new(),
    });
    Ok(json_text(entry_to_canonical_json(&entry)))
}

async fn put_annotations(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let ep = load(&state, id.clone()).await?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::BadRequest("body is not UTF-8".into()))?;
    let entry = parse_entry(&id, text)?;
    let store = state.store.clone();
    let labels = state.dataset.config().label_set.clone();
    let saved = blocking(move || {
        store.put(&id, entry, ep.duration, &labels).map_err(|e| match e {
            StoreError::File(e) => e.into(),
            StoreError::Session(e) => e.into(),
        })
    })
    .await?;
    Ok(json_text(entry_to_canonical_json(&saved)))
}
