mod common;

use common::*;
use rand::{Rng, SeedableRng};
use seglab_core::annotation::{AnnotationFile, EpisodeEntry};
use seglab_core::model::AnnotationSegment;

#[tokio::test]
async fn lists_episodes_with_durations() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = frames_app(dir.path());
    let r = get(&app, "/api/episodes").await;
    assert_eq!(r.status, 200);
    let v = r.json();
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 3);
    let want = [("ep_a", 4.0 / 30.0), ("ep_b", 2.0 / 30.0), ("ep_c", 11.0 / 30.0)];
    for (item, (id, d)) in items.iter().zip(want) {
        assert_eq!(item["id"], id);
        assert_eq!(item["duration"].as_f64().unwrap(), d);
    }
}

#[tokio::test]
async fn config_exposes_labels_and_shortcuts() {
    let dir = tempfile::tempdir().unwrap();
    let (app, cfg) = frames_app(dir.path());
    let v = get(&app, "/api/config").await.json();
    assert_eq!(v["label_set"], serde_json::json!(LABELS));
    assert_eq!(v["shortcuts"]["toggle_segment"], cfg.shortcuts["toggle_segment"]);
    assert_eq!(v["nav_slow_step"].as_f64().unwrap(), cfg.nav_slow_step);
}

#[tokio::test]
async fn meta_describes_streams() {
    let dir = tempfile::tempdir().unwrap();
    let (app, fx) = h5_app(dir.path());
    let v = get(&app, "/api/episodes/ep/meta").await.json();
    assert_eq!(v["description"], "peg in hole");
    assert_eq!(v["cameras"][0]["name"], "video/hand");
    assert_eq!(v["cameras"][0]["frames"], fx.frames);
    let chans = v["channels"].as_array().unwrap();
    assert_eq!(chans.len(), 2);
    assert_eq!(chans[1]["name"], "robot_state/wrench");
    assert_eq!(chans[1]["dims"], 6);
    assert_eq!(chans[1]["samples"], 100);
    assert_eq!(get(&app, "/api/episodes/zzz/meta").await.status, 404);
}

#[tokio::test]
async fn frame_at_zero_is_the_first_file() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = frames_app(dir.path());
    let r = get(&app, "/api/episodes/ep_a/frame?camera=main&t=0").await;
    assert_eq!(r.status, 200);
    assert_eq!(r.header("content-type"), "image/png");
    assert_eq!(r.body, std::fs::read(dir.path().join("frames/ep_a/frame_0.png")).unwrap());
}

#[tokio::test]
async fn raw_frames_are_served_as_png() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = h5_app(dir.path());
    let r = get(&app, "/api/episodes/ep/frame?camera=video/hand&t=0.5").await;
    assert_eq!(r.status, 200);
    assert_eq!(r.header("content-type"), "image/png");
    assert_eq!(&r.body[..8], b"\x89PNG\r\n\x1a\n");
}

#[tokio::test]
async fn frame_seek_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = frames_app(dir.path());
    let ts: Vec<f64> = (0..12).map(|k| k as f64 / 30.0).collect();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for _ in 0..200 {
        let t: f64 = rng.gen_range(-0.2..0.6);
        let r = get(&app, &format!("/api/episodes/ep_c/frame?camera=main&t={t}")).await;
        assert_eq!(r.status, 200);
        let k: usize = r.header("x-frame-index").parse().unwrap();
        assert_eq!(k, nearest_oracle(&ts, t), "t={t}");
        assert_eq!(r.body, std::fs::read(dir.path().join(format!("frames/ep_c/frame_{k}.png"))).unwrap());
    }
}

#[tokio::test]
async fn frame_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = frames_app(dir.path());
    assert_eq!(get(&app, "/api/episodes/nope/frame?camera=main&t=0").await.status, 404);
    assert_eq!(get(&app, "/api/episodes/ep_a/frame?camera=side&t=0").await.status, 404);
    let r = get(&app, "/api/episodes/ep_a/frame?camera=main").await;
    assert_eq!(r.status, 400);
    assert!(r.json()["error"].as_str().unwrap().contains('t'));
    assert_eq!(get(&app, "/api/episodes/ep_a/frame?camera=main&t=abc").await.status, 400);
}

#[tokio::test]
async fn series_window_keeps_extremes() {
    let dir = tempfile::tempdir().unwrap();
    let (app, fx) = h5_app(dir.path());
    // raw passthrough when the window is small enough
    let v = get(&app, "/api/episodes/ep/series?channel=robot_state/wrench&max_points=1000").await.json();
    assert_eq!(v["downsampled"], false);
    assert_eq!(v["dims"], 6);
    let fz: Vec<f64> = v["series"][2]["v"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let want: Vec<f64> = fx.wrench.iter().skip(2).step_by(6).copied().collect();
    assert_eq!(fz, want);

    let v = get(&app, "/api/episodes/ep/series?channel=robot_state/wrench&from=0.1&to=0.8&max_points=10").await.json();
    assert_eq!(v["downsampled"], true);
    for d in 0..6 {
        let got: Vec<f64> = v["series"][d]["v"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(got.len() <= 10);
        let window: Vec<f64> = (0..100)
            .filter(|k| (0.1..=0.8).contains(&(fx.wrench_ts[*k] - fx.wrench_ts[0])))
            .map(|k| fx.wrench[k * 6 + d])
            .collect();
        let max = window.iter().copied().fold(f64::MIN, f64::max);
        let min = window.iter().copied().fold(f64::MAX, f64::min);
        assert!(got.contains(&max) && got.contains(&min), "dim {d}");
    }
    assert_eq!(get(&app, "/api/episodes/ep/series?channel=nope").await.status, 404);
    assert_eq!(get(&app, "/api/episodes/ep/series?channel=robot_state/wrench&from=2&to=1").await.status, 400);
}

fn entry_json(segments: &[(f64, f64, &str, bool)]) -> String {
    let segs: Vec<String> = segments
        .iter()
        .map(|(s, e, l, ok)| format!(r#"{{"start": {s}, "end": {e}, "label": "{l}", "success": {ok}}}"#))
        .collect();
    format!(r#"{{"segments": [{}]}}"#, segs.join(","))
}

#[tokio::test]
async fn annotations_round_trip_canonically() {
    let dir = tempfile::tempdir().unwrap();
    let (app, cfg) = frames_app(dir.path());
    let uri = "/api/episodes/ep_c/annotations";
    let empty = get(&app, uri).await;
    assert_eq!(empty.status, 200);
    assert_eq!(empty.json()["segments"], serde_json::json!([]));

    let body = entry_json(&[(0.0, 0.1, "approach", false), (0.2, 0.3, "grasp", true)]);
    let put_r = put(&app, uri, &body).await;
    assert_eq!(put_r.status, 200, "{}", put_r.text());
    let got = get(&app, uri).await;
    assert_eq!(got.text(), put_r.text());
    assert_eq!(got.text(), get(&app, uri).await.text());
    assert!(got.text().contains("\"start\": 0.200000"));

    // the file on disk holds the same entry, and putting the canonical text back is a no-op
    let file = AnnotationFile::load(&cfg.annotation_file()).unwrap();
    assert_eq!(file.episodes["ep_c"].segments.len(), 2);
    let again = put(&app, uri, &got.text()).await;
    assert_eq!(again.text(), got.text());
    let bytes = std::fs::read(cfg.annotation_file()).unwrap();
    put(&app, uri, &got.text()).await;
    assert_eq!(std::fs::read(cfg.annotation_file()).unwrap(), bytes);
}

#[tokio::test]
async fn invalid_annotations_are_rejected_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = frames_app(dir.path());
    let uri = "/api/episodes/ep_c/annotations";
    put(&app, uri, &entry_json(&[(0.0, 0.1, "grasp", true)])).await;
    let before = get(&app, uri).await.text();

    let cases = [
        (r#"{"segments": [{"start": 0, "end": 1, "label": "grasp"}]}"#.to_string(), "segments[0]"),
        (r#"{"segments": [], "extra": 1}"#.to_string(), ""),
        (entry_json(&[(0.0, 0.2, "grasp", true), (0.1, 0.3, "lift", true)]), "segments"),
        (entry_json(&[(0.0, 5.0, "grasp", true)]), "segments"),
        (entry_json(&[(0.0, 0.1, "juggle", true)]), "segments"),
        (entry_json(&[(0.2, 0.1, "grasp", true)]), "segments[0]"),
        (entry_json(&[(0.2, 0.3, "grasp", true), (0.0, 0.1, "lift", true)]), "segments[1]"),
    ];
    for (body, path) in cases {
        let r = put(&app, uri, &body).await;
        assert_eq!(r.status, 422, "{body}: {}", r.text());
        let v = r.json();
        assert!(v["error"].as_str().is_some());
        assert!(v["path"].as_str().unwrap_or("").starts_with(path), "{body}: {v}");
    }
    assert_eq!(put(&app, uri, "not json").await.status, 422);
    assert_eq!(get(&app, uri).await.text(), before);
    assert_eq!(put(&app, "/api/episodes/zzz/annotations", "{\"segments\": []}").await.status, 404);
}

#[tokio::test]
async fn annotations_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (app, cfg) = frames_app(dir.path());
    let r = put(&app, "/api/episodes/ep_a/annotations", &entry_json(&[(0.0, 0.05, "lift", true)])).await;
    assert_eq!(r.status, 200);
    let app2 = seglab_gateway::router(seglab_gateway::AppState::open(cfg).unwrap());
    assert_eq!(get(&app2, "/api/episodes/ep_a/annotations").await.text(), r.text());
    let entry: EpisodeEntry = serde_json::from_str(&r.text()).unwrap();
    assert_eq!(entry.segments, vec![AnnotationSegment::new(0.0, 0.05, "lift", true)]);
}
