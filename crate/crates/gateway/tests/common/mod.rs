#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use seglab_core::config::{DatasetFormat, ToolConfig};
use seglab_gateway::{router, AppState};
use tower::ServiceExt;

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn header(&self, name: &str) -> &str {
        self.headers.get(name).unwrap().to_str().unwrap()
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

pub async fn put(app: &Router, uri: &str, body: &str) -> Reply {
    call(app, Method::PUT, uri, Some(body)).await
}

pub const LABELS: [&str; 3] = ["approach", "grasp", "lift"];

/// Frames dataset with episodes `ep_a` (5 frames), `ep_b` (3) and `ep_c` (12).
pub fn frames_app(root: &Path) -> (Router, ToolConfig) {
    let data = root.join("frames");
    seglab_testkit::datasets::frames_dataset(&data, &[("ep_a", 5), ("ep_b", 3), ("ep_c", 12)]);
    let mut cfg = ToolConfig::new(DatasetFormat::Frames, &data, LABELS.iter().map(|s| s.to_string()).collect());
    cfg.annotation_output_path = root.join("annotations");
    let state = AppState::open(cfg.clone()).unwrap();
    (router(state), cfg)
}

/// HDF5 dataset with one episode `ep` holding a wrench, a gripper width and
/// a raw camera.
pub fn h5_app(root: &Path) -> (Router, seglab_testkit::datasets::H5Episode) {
    let data = root.join("h5");
    std::fs::create_dir_all(&data).unwrap();
    let fx = seglab_testkit::datasets::h5_episode(&data.join("ep.h5"), 50.0, Some("peg in hole"));
    let mut cfg = ToolConfig::new(DatasetFormat::Reassemble, &data, LABELS.iter().map(|s| s.to_string()).collect());
    cfg.annotation_output_path = root.join("annotations");
    (router(AppState::open(cfg).unwrap()), fx)
}

/// Frame index at `t` by linear scan: nearest timestamp, earlier on ties,
/// clamped to the ends.
pub fn nearest_oracle(ts: &[f64], t: f64) -> usize {
    let mut best = 0;
    for (i, &x) in ts.iter().enumerate() {
        if (x - t).abs() < (ts[best] - t).abs() {
            best = i;
        }
    }
    best
}
