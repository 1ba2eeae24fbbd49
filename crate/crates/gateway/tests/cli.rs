use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seglab_core::annotation::{AnnotationFile, EpisodeEntry};
use seglab_core::config::{DatasetFormat, ToolConfig};
use seglab_core::model::AnnotationSegment;

fn seglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seglab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_file(path: &Path, annotator: &str, episodes: &[(&str, Vec<AnnotationSegment>)]) {
    let mut f = AnnotationFile::new("demo", annotator);
    for (id, segs) in episodes {
        f.episodes.insert(id.to_string(), EpisodeEntry { description: None, segments: segs.clone() });
    }
    f.save(path).unwrap();
}

fn seg(s: f64, e: f64, l: &str) -> AnnotationSegment {
    AnnotationSegment::new(s, e, l, true)
}

fn pair(dir: &Path) -> (PathBuf, PathBuf) {
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    write_file(&a, "alice", &[("e", vec![seg(0.0, 5.0, "grasp"), seg(5.0, 10.0, "lift")])]);
    write_file(&b, "bob", &[("e", vec![seg(0.0, 4.0, "grasp"), seg(4.0, 10.0, "lift")])]);
    (a, b)
}

fn config_file(dir: &Path, episodes: &[(&str, usize)]) -> PathBuf {
    let data = dir.join("frames");
    std::fs::create_dir_all(&data).unwrap();
    seglab_testkit::datasets::frames_dataset(&data, episodes);
    let mut cfg = ToolConfig::new(DatasetFormat::Frames, &data, vec!["grasp".into()]);
    cfg.annotation_output_path = dir.join("out");
    let path = dir.join("tool.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

#[test]
fn metrics_on_hand_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = pair(dir.path());
    let o = seglab(&["metrics", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["A"].as_f64().unwrap() - 90.0).abs() < 1e-7);
    for k in ["D_forward", "D_backward", "D_sym"] {
        assert!((v[k].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9, "{k}");
    }
    let text = stdout(&seglab(&["metrics", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]));
    assert!(text.contains("90.000"), "{text}");
    assert!(text.contains("0.3333"), "{text}");
}

#[test]
fn metrics_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = pair(dir.path());
    let o = seglab(&["metrics", "--a", a.to_str().unwrap(), "--b", a.to_str().unwrap(), "--json", "--include-outcome"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["A"].as_f64().unwrap(), 100.0);
    assert_eq!(v["D_sym"].as_f64().unwrap(), 0.0);
}

#[test]
fn metrics_with_disjoint_episodes_fails() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_file(&a, "alice", &[("x", vec![seg(0.0, 1.0, "grasp")])]);
    write_file(&b, "bob", &[("y", vec![seg(0.0, 1.0, "grasp")])]);
    let o = seglab(&["metrics", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn merge_gt_averages_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = pair(dir.path());
    let out = dir.path().join("gt.json");
    let o = seglab(&["merge-gt", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let gt = AnnotationFile::load(&out).unwrap();
    let segs = &gt.episodes["e"].segments;
    assert_eq!(segs[0].end, 4.5);
    assert_eq!(segs[1].start, 4.5);
    assert!(seglab(&["validate", out.to_str().unwrap()]).status.success());
}

#[test]
fn merge_gt_refuses_mismatched_labels() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_file(&a, "alice", &[("e", vec![seg(0.0, 1.0, "grasp")])]);
    write_file(&b, "bob", &[("e", vec![seg(0.0, 1.0, "lift")])]);
    let out = dir.path().join("gt.json");
    let o = seglab(&["merge-gt", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("labels diverge"));
    assert!(!out.exists());
}

#[test]
fn validate_reports_problems() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = pair(dir.path());
    let o = seglab(&["validate", a.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with(": ok\n"));

    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&a).unwrap().replace("\"1.0\"", "\"9.9\"").replace("\"start\": 5.000000", "\"start\": 4.000000");
    std::fs::write(&bad, text).unwrap();
    let o = seglab(&["validate", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2, "{out}");
    assert!(out.contains("version"));
    assert!(out.contains("overlaps"));

    std::fs::write(&bad, "{\"version\": \"1.0\"}").unwrap();
    let o = seglab(&["validate", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("dataset"));
}

#[test]
fn inspect_lists_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), &[("ep_a", 4), ("ep_b", 9)]);
    let o = seglab(&["inspect", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("2 episodes"), "{out}");
    assert!(out.contains("ep_a") && out.contains("ep_b"));

    let o = seglab(&["inspect", "--config", cfg.to_str().unwrap(), "--episode", "ep_b"]);
    let out = stdout(&o);
    assert!(out.contains("main"), "{out}");
    assert!(out.contains("9 frames"), "{out}");

    let o = seglab(&["inspect", "--config", cfg.to_str().unwrap(), "--episode", "nope"]);
    assert!(!o.status.success());
}

#[test]
fn inspect_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), &[]);
    let o = seglab(&["inspect", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 episodes"));
}
