//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any fails.

#[path = "common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use seglab_core::annotation::{AnnotationFile, AnnotationSession, EpisodeEntry, SegmentPatch};
use seglab_core::metrics::{agreement, boundary_distances, concatenate, merge_ground_truth, sym_boundary_distance, BoundarySet};
use seglab_core::model::{first_overlap, AnnotationSegment, EpisodeAnnotation, LabelTimeline};
use seglab_core::sync::nearest_index;

const EPS: f64 = 1e-6;
const LABELS: [&str; 3] = ["approach", "grasp", "lift"];

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "metrics exactness", limit: Duration::from_secs(1), run: metrics_exactness },
        Criterion { name: "metrics properties", limit: Duration::from_secs(30), run: metrics_properties },
        Criterion { name: "ground-truth merge", limit: Duration::from_secs(10), run: ground_truth_merge },
        Criterion { name: "format round-trips", limit: Duration::from_secs(120), run: format_round_trips },
        Criterion { name: "sync oracle", limit: Duration::from_secs(60), run: sync_oracle },
        Criterion { name: "prefetch transparency", limit: Duration::from_secs(60), run: prefetch::transparency },
        Criterion { name: "annotation store", limit: Duration::from_secs(60), run: annotation_store },
        Criterion { name: "gateway conformance", limit: Duration::from_secs(60), run: gateway_conformance },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= c.limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.2?}, limit {:?}", c.limit))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS  {:<24} {detail} [{elapsed:.2?}]", c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<24} {why} [{elapsed:.2?}]", c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// ---- oracles ----

/// Label at `t` straight from the segment list; `None` outside every segment.
fn label_at(ann: &EpisodeAnnotation, t: f64) -> Option<&str> {
    ann.segments.iter().find(|s| s.start <= t && t < s.end).map(|s| s.label.as_str())
}

/// Agreement by cutting [0, T] at every segment edge and comparing midpoints.
fn agreement_oracle(a: &EpisodeAnnotation, b: &EpisodeAnnotation, duration: f64) -> f64 {
    let mut cuts = vec![0.0, duration];
    for s in a.segments.iter().chain(&b.segments) {
        cuts.push(s.start);
        cuts.push(s.end);
    }
    cuts.sort_by(f64::total_cmp);
    let mut same = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let mid = (w[0] + w[1]) / 2.0;
            if label_at(a, mid) == label_at(b, mid) {
                same += w[1] - w[0];
            }
        }
    }
    same / duration
}

fn boundaries_oracle(ann: &EpisodeAnnotation) -> Vec<f64> {
    let mut all: Vec<f64> = ann.segments.iter().flat_map(|s| [s.start, s.end]).collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for t in all {
        if out.last().is_none_or(|&l| t - l > EPS) {
            out.push(t);
        }
    }
    out
}

fn distance_oracle(from: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .map(|b| to.iter().map(|x| (b - x).abs()).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / from.len() as f64
}

fn ann(id: &str, segs: &[(f64, f64, &str)]) -> EpisodeAnnotation {
    EpisodeAnnotation::new(id, "x", segs.iter().map(|&(s, e, l)| AnnotationSegment::new(s, e, l, true)).collect())
}

fn timeline(a: &EpisodeAnnotation, duration: f64) -> LabelTimeline {
    LabelTimeline::from_annotation(a, duration).unwrap()
}

fn bset(a: &EpisodeAnnotation) -> BoundarySet {
    BoundarySet::from_annotation(a, EPS)
}

// ---- criteria ----

fn metrics_exactness() -> Outcome {
    let x = ann("e", &[(0.0, 5.0, "grasp"), (5.0, 10.0, "lift")]);
    let y = ann("e", &[(0.0, 4.0, "grasp"), (4.0, 10.0, "lift")]);
    let a = agreement(&timeline(&x, 10.0), &timeline(&y, 10.0)).map_err(|e| e.to_string())?;
    let a_oracle = agreement_oracle(&x, &y, 10.0);
    ensure!((a - 0.9).abs() <= 1e-9 && (a_oracle - 0.9).abs() <= 1e-9, "A = {a}, oracle {a_oracle}");
    let d = boundary_distances(&bset(&x), &bset(&y)).map_err(|e| e.to_string())?;
    let (bx, by) = (boundaries_oracle(&x), boundaries_oracle(&y));
    ensure!(bx == [0.0, 5.0, 10.0] && by == [0.0, 4.0, 10.0], "boundaries {bx:?} {by:?}");
    let fwd = distance_oracle(&bx, &by);
    let bwd = distance_oracle(&by, &bx);
    for (name, got, oracle) in [("D_fwd", d.forward, fwd), ("D_bwd", d.backward, bwd), ("D_sym", d.sym, (fwd + bwd) / 2.0)] {
        ensure!((got - 1.0 / 3.0).abs() <= 1e-9 && (oracle - 1.0 / 3.0).abs() <= 1e-9, "{name} = {got}, oracle {oracle}");
    }
    Ok(format!("A={a:.6} D_sym={:.9}", d.sym))
}

fn random_annotation(rng: &mut StdRng, duration: f64, min_segments: usize) -> EpisodeAnnotation {
    let n = rng.gen_range(min_segments..=8);
    let mut pts: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..duration)).collect();
    pts.sort_by(f64::total_cmp);
    // contiguous runs are common in practice, so sometimes glue segments together
    for k in (2..pts.len()).step_by(2) {
        if rng.gen_bool(0.3) {
            pts[k] = pts[k - 1];
        }
    }
    let segments = pts
        .chunks(2)
        .filter(|p| p[1] > p[0])
        .map(|p| AnnotationSegment::new(p[0], p[1], LABELS[rng.gen_range(0..3)], rng.gen_bool(0.5)))
        .collect();
    EpisodeAnnotation::new("e", "r", segments)
}

fn scaled(a: &EpisodeAnnotation, c: f64) -> EpisodeAnnotation {
    let mut out = a.clone();
    for s in &mut out.segments {
        s.start *= c;
        s.end *= c;
    }
    out
}

fn metrics_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    for case in 0..10_000 {
        let t = rng.gen_range(1.0..50.0);
        let x = random_annotation(&mut rng, t, 1);
        let y = random_annotation(&mut rng, t, 1);
        if x.segments.is_empty() || y.segments.is_empty() {
            continue;
        }
        let (tx, ty) = (timeline(&x, t), timeline(&y, t));
        let axy = agreement(&tx, &ty).unwrap();
        ensure!((0.0..=1.0).contains(&axy), "case {case}: A = {axy}");
        ensure!(close(axy, agreement_oracle(&x, &y, t)), "case {case}: A = {axy} vs oracle");
        let axx = agreement(&tx, &tx).unwrap();
        ensure!(axx == 1.0, "case {case}: A(x,x) = {axx}");
        ensure!(close(axy, agreement(&ty, &tx).unwrap()), "case {case}: A not symmetric");

        let (bx, by) = (bset(&x), bset(&y));
        let d = boundary_distances(&bx, &by).unwrap();
        ensure!(d.sym >= 0.0, "case {case}: D_sym < 0");
        ensure!(close(d.forward, distance_oracle(bx.times(), by.times())), "case {case}: D_fwd vs oracle");
        ensure!(close(d.sym, sym_boundary_distance(&by, &bx).unwrap()), "case {case}: D_sym not symmetric");
        ensure!(sym_boundary_distance(&bx, &bx).unwrap() == 0.0, "case {case}: D(x,x) != 0");

        let c = rng.gen_range(0.1..10.0);
        let (xs, ys) = (scaled(&x, c), scaled(&y, c));
        let a_scaled = agreement(&timeline(&xs, t * c), &timeline(&ys, t * c)).unwrap();
        ensure!(close(a_scaled, axy), "case {case}: A changed under scaling by {c}");
        let d_scaled = sym_boundary_distance(&bset(&xs), &bset(&ys)).unwrap();
        ensure!(close(d_scaled, c * d.sym), "case {case}: D_sym {d_scaled} != {c} * {}", d.sym);

        let t2 = rng.gen_range(1.0..50.0);
        let x2 = random_annotation(&mut rng, t2, 1);
        let y2 = random_annotation(&mut rng, t2, 1);
        let a2 = agreement_oracle(&x2, &y2, t2);
        let (cx, total) = concatenate(&[(x.clone(), t), (x2, t2)]);
        let (cy, _) = concatenate(&[(y.clone(), t), (y2, t2)]);
        let a_cat = agreement(&timeline(&cx, total), &timeline(&cy, total)).unwrap();
        ensure!(close(a_cat, (axy * t + a2 * t2) / (t + t2)), "case {case}: concatenated A is not the weighted mean");
    }
    Ok("10000 pairs".into())
}

fn jitter(rng: &mut StdRng, a: &EpisodeAnnotation) -> EpisodeAnnotation {
    let mut out = a.clone();
    for s in &mut out.segments {
        s.start += rng.gen_range(-0.05..=0.05);
        s.end += rng.gen_range(-0.05..=0.05);
    }
    out
}

fn ground_truth_merge() -> Outcome {
    let mut rng = StdRng::seed_from_u64(33);
    let mut better = 0;
    let mut worst_shift: f64 = 0.0;
    for trial in 0..100 {
        let mut t = 0.1;
        let mut segs = Vec::new();
        for _ in 0..20 {
            t += rng.gen_range(0.2..1.0);
            let end = t + rng.gen_range(0.5..4.0);
            segs.push(AnnotationSegment::new(t, end, LABELS[rng.gen_range(0..3)], true));
            t = end;
        }
        let original = EpisodeAnnotation::new("e", "o", segs);
        let (a, b) = (jitter(&mut rng, &original), jitter(&mut rng, &original));
        let merged = merge_ground_truth(&a, &b).map_err(|e| format!("trial {trial}: {e}"))?;
        for (m, o) in merged.segments.iter().zip(&original.segments) {
            worst_shift = worst_shift.max((m.start - o.start).abs()).max((m.end - o.end).abs());
        }
        let orig = bset(&original);
        let dm = sym_boundary_distance(&bset(&merged), &orig).unwrap();
        let da = sym_boundary_distance(&bset(&a), &orig).unwrap();
        let db = sym_boundary_distance(&bset(&b), &orig).unwrap();
        better += (dm <= da.min(db)) as usize;
    }
    ensure!(worst_shift <= 0.05 + 1e-12, "a merged boundary moved {worst_shift} s");
    ensure!(better >= 95, "merged beat both copies in {better}/100 trials");
    Ok(format!("max shift {worst_shift:.4} s, better in {better}/100"))
}

fn format_round_trips() -> Outcome {
    formats::run()
}

fn nearest_oracle(ts: &[f64], t: f64) -> usize {
    common::nearest_oracle(ts, t)
}

fn sync_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..100_000 {
        let n = rng.gen_range(1..40);
        // a coarse grid makes exact ties and duplicates frequent
        let mut ts: Vec<f64> = (0..n).map(|_| rng.gen_range(0..60) as f64 * 0.25).collect();
        ts.sort_by(f64::total_cmp);
        let t = rng.gen_range(-20..280) as f64 * 0.0625;
        let got = nearest_index(&ts, t).unwrap();
        let want = nearest_oracle(&ts, t);
        ensure!(got == want, "case {case}: t={t} in {ts:?}: got {got}, oracle {want}");
        let t2 = t + rng.gen_range(0.0..3.0);
        ensure!(nearest_index(&ts, t2).unwrap() >= got, "case {case}: not monotone at {t} -> {t2}");
    }

    let n = 1_000_000;
    let mut ts = Vec::with_capacity(n);
    let mut t = 0.0;
    for _ in 0..n {
        ts.push(t);
        t += rng.gen_range(0.0005..0.0015);
    }
    let queries: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..t + 1.0)).collect();
    let start = Instant::now();
    let mut sum = 0usize;
    for &q in &queries {
        sum = sum.wrapping_add(nearest_index(std::hint::black_box(&ts), q).unwrap());
    }
    std::hint::black_box(sum);
    let per = start.elapsed() / n as u32;
    ensure!(per <= Duration::from_micros(10), "{per:?} per lookup");
    Ok(format!("100000 cases, {per:.2?} per lookup on {n} samples"))
}

fn annotation_store() -> Outcome {
    let mut rng = StdRng::seed_from_u64(99);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("a.json");
    for round in 0..100 {
        let mut file = AnnotationFile::new("set", "ann");
        for e in 0..rng.gen_range(0..5) {
            let a = random_annotation(&mut rng, 30.0, 0);
            let description = rng.gen_bool(0.5).then(|| format!("task \"{e}\"\n\u{e9}"));
            file.episodes.insert(format!("ep_{e}"), EpisodeEntry { description, segments: a.segments });
        }
        file.save(&path).map_err(|e| e.to_string())?;
        let first = std::fs::read(&path).unwrap();
        let loaded = AnnotationFile::load(&path).map_err(|e| format!("round {round}: {e}"))?;
        ensure!(loaded == file, "round {round}: load(save(x)) != x");
        loaded.save(&path).map_err(|e| e.to_string())?;
        ensure!(std::fs::read(&path).unwrap() == first, "round {round}: second save differs");
    }

    let duration = 20.0;
    let labels: Vec<String> = LABELS.iter().map(|s| s.to_string()).collect();
    let grid = |rng: &mut StdRng| rng.gen_range(-2..=42) as f64 * 0.5;
    for seq in 0..10_000 {
        let mut s = AnnotationSession::new("e", "a", duration, labels.clone());
        let mut pending: Option<f64> = None;
        for _ in 0..rng.gen_range(1..30) {
            let label = if rng.gen_bool(0.95) { LABELS[rng.gen_range(0..3)] } else { "juggle" };
            match rng.gen_range(0..10) {
                0..=2 => {
                    let t = grid(&mut rng);
                    if s.begin_segment(t).is_ok() {
                        ensure!(pending.is_none(), "seq {seq}: begin accepted while pending");
                        pending = Some(t);
                    }
                }
                3..=5 => {
                    let t = grid(&mut rng);
                    if s.end_segment(t, label, rng.gen_bool(0.5)).is_ok() {
                        pending = None;
                    }
                }
                6 => {
                    s.cancel();
                    pending = None;
                }
                7 => {
                    let patch = SegmentPatch {
                        start: rng.gen_bool(0.5).then(|| grid(&mut rng)),
                        end: rng.gen_bool(0.5).then(|| grid(&mut rng)),
                        label: rng.gen_bool(0.3).then(|| label.to_string()),
                        success: rng.gen_bool(0.3).then(|| rng.gen_bool(0.5)),
                    };
                    let _ = s.edit_segment(rng.gen_range(0..4), &patch);
                }
                8 => {
                    let _ = s.delete_segment(rng.gen_range(0..4));
                }
                _ => {
                    let list = (0..rng.gen_range(0..4))
                        .map(|_| {
                            let (a, b) = (grid(&mut rng), grid(&mut rng));
                            AnnotationSegment::new(a.min(b), a.max(b), label, true)
                        })
                        .collect();
                    let _ = s.set_segments(list);
                }
            }
            let segs = s.segments();
            ensure!(first_overlap(segs).is_none(), "seq {seq}: overlap in {segs:?}");
            ensure!(segs.windows(2).all(|w| w[0].start <= w[1].start), "seq {seq}: unsorted {segs:?}");
            ensure!(
                segs.iter().all(|g| 0.0 <= g.start && g.start < g.end && g.end <= duration && labels.contains(&g.label)),
                "seq {seq}: invalid segment in {segs:?}"
            );
            ensure!(s.pending_start() == pending, "seq {seq}: pending {:?}, expected {pending:?}", s.pending_start());
        }
    }
    Ok("100 files idempotent, 10000 sequences clean".into())
}

fn gateway_conformance() -> Outcome {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let dir = tempfile::tempdir().unwrap();
        let (app, _) = common::frames_app(dir.path());
        let eps = common::get(&app, "/api/episodes").await.json();
        ensure!(eps.as_array().map(Vec::len) == Some(3), "episodes: {eps}");

        let mut rng = StdRng::seed_from_u64(8);
        let mut seeks = 0;
        for (id, n) in [("ep_a", 5usize), ("ep_b", 3), ("ep_c", 12)] {
            let ts: Vec<f64> = (0..n).map(|k| k as f64 / 30.0).collect();
            let meta = common::get(&app, &format!("/api/episodes/{id}/meta")).await.json();
            ensure!(meta["cameras"][0]["frames"] == n, "{id} meta: {meta}");
            for _ in 0..100 {
                let t: f64 = rng.gen_range(-0.1..0.5);
                let r = common::get(&app, &format!("/api/episodes/{id}/frame?camera=main&t={t}")).await;
                ensure!(r.status == 200, "{id} t={t}: status {}", r.status);
                let k: usize = r.header("x-frame-index").parse().unwrap();
                ensure!(k == nearest_oracle(&ts, t), "{id} t={t}: frame {k}, oracle {}", nearest_oracle(&ts, t));
                seeks += 1;
            }
        }

        let uri = "/api/episodes/ep_c/annotations";
        let body = r#"{"description": "pick", "segments": [{"start": 0.0, "end": 0.1, "label": "approach", "success": true}, {"start": 0.1, "end": 0.3333333333, "label": "grasp", "success": false}]}"#;
        let put = common::put(&app, uri, body).await;
        ensure!(put.status == 200, "PUT: {} {}", put.status, put.text());
        let got = common::get(&app, uri).await;
        ensure!(got.text() == put.text(), "GET differs from PUT response");
        let again = common::put(&app, uri, &got.text()).await;
        ensure!(again.text() == got.text(), "canonical text does not round-trip");
        let bad = common::put(&app, uri, r#"{"segments": [{"start": 0.0, "end": 0.2, "label": "grasp", "success": true}, {"start": 0.1, "end": 0.3, "label": "lift", "success": true}]}"#).await;
        ensure!(bad.status == 422, "overlapping PUT got {}", bad.status);
        ensure!(common::get(&app, uri).await.text() == got.text(), "rejected PUT changed state");
        Ok(format!("{seeks} seeks match, PUT/GET canonical"))
    })
}

mod formats {
    use super::*;
    use seglab_core::config::{ChannelDecl, DatasetFormat, RldsSettings, ToolConfig};
    use seglab_formats::frame::FrameKind;
    use seglab_formats::rlds::tfrecord::read_tfrecord_stream;
    use seglab_formats::rosbag::decode::{decode_message, Decoded, Serialization};
    use seglab_formats::Dataset;
    use seglab_testkit::bag1::Compression;
    use seglab_testkit::datasets;
    use seglab_testkit::msgs::{cdr, random_msg, ros1, Msg};

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    fn open(format: DatasetFormat, path: &std::path::Path, f: impl FnOnce(&mut ToolConfig)) -> Result<Dataset, String> {
        let mut cfg = ToolConfig::new(format, path, vec!["grasp".into()]);
        f(&mut cfg);
        Dataset::open(cfg).map_err(|e| e.to_string())
    }

    pub fn run() -> Outcome {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();

        for (i, compression) in [Compression::None, Compression::Lz4].into_iter().enumerate() {
            let path = root.join(format!("run{i}.bag"));
            let fx = datasets::ros1_bag(&path, 1_700_000_000_000_000_000, compression);
            let ds = open(DatasetFormat::Rosbag1, &path, |_| ())?;
            let ep = ds.load_episode(&format!("run{i}")).map_err(|e| e.to_string())?;
            let want: Vec<f64> = fx.wrench.iter().flatten().copied().collect();
            ensure!(bits(&ep.channel("ft_sensor/wrench").unwrap().values) == bits(&want), "rosbag1 wrench differs");
            ensure!(bits(&ep.channel("joint_states.pos").unwrap().values) == bits(&fx.joints.concat()), "rosbag1 joints differ");
        }

        let bag = root.join("session");
        let (poses, grips) = datasets::ros2_bag(&bag, 1_600_000_000_000_000_000);
        let ds = open(DatasetFormat::Rosbag2, &bag, |c| {
            c.channels = vec![ChannelDecl::new("pose", "/ee_pose"), ChannelDecl::new("gripper", "/gripper")];
        })?;
        let ep = ds.load_episode("session").map_err(|e| e.to_string())?;
        ensure!(bits(&ep.channel("pose").unwrap().values) == bits(&poses.concat()), "rosbag2 pose differs");
        ensure!(bits(&ep.channel("gripper").unwrap().values) == bits(&grips.concat()), "rosbag2 gripper differs");

        let rlds = root.join("rlds");
        std::fs::create_dir_all(&rlds).unwrap();
        let fx = datasets::rlds_dataset(&rlds, &[3, 2], 6);
        let ds = open(DatasetFormat::Rlds, &rlds, |c| {
            c.rlds = Some(RldsSettings { step_rate: Some(10.0), ..Default::default() });
        })?;
        for e in &fx {
            let ep = ds.load_episode(&format!("{}_{}", e.shard, e.ordinal)).map_err(|e| e.to_string())?;
            let want: Vec<f64> = e.state.iter().map(|&x| x as f64).collect();
            ensure!(bits(&ep.channel(datasets::RLDS_STATE_KEY).unwrap().values) == bits(&want), "RLDS state differs");
        }

        let h5 = root.join("h5");
        std::fs::create_dir_all(&h5).unwrap();
        let fx = datasets::h5_episode(&h5.join("ep.h5"), 100.0, None);
        let ds = open(DatasetFormat::Reassemble, &h5, |_| ())?;
        let ep = ds.load_episode("ep").map_err(|e| e.to_string())?;
        ensure!(bits(&ep.channel("robot_state/wrench").unwrap().values) == bits(&fx.wrench), "HDF5 wrench differs");
        ensure!(bits(&ep.channel("robot_state/gripper_width").unwrap().values) == bits(&fx.gripper), "HDF5 gripper differs");

        let frames = root.join("frames");
        datasets::frames_dataset(&frames, &[("ep_a", 11)]);
        let ds = open(DatasetFormat::Frames, &frames, |_| ())?;
        for k in 0..11 {
            let f = ds.frame("ep_a", "main", k).map_err(|e| e.to_string())?;
            let want = std::fs::read(frames.join(format!("ep_a/frame_{k}.png"))).unwrap();
            ensure!(f.kind == FrameKind::Png && f.bytes == want, "frame {k} differs");
        }

        let mut m = std::collections::BTreeMap::new();
        m.insert("steps/x".to_string(), seglab_testkit::tfrecord::Feature::Floats(vec![0.5, 1.5]));
        let payloads = vec![seglab_testkit::tfrecord::encode_example(&m, true), Vec::new()];
        let shard = seglab_testkit::tfrecord::shard(&payloads);
        for bit in 0..shard.len() * 8 {
            let mut bad = shard.clone();
            bad[bit / 8] ^= 1 << (bit % 8);
            ensure!(
                read_tfrecord_stream(std::io::Cursor::new(&bad)).any(|r| r.is_err()),
                "TFRecord bit flip {bit} undetected"
            );
        }

        let mut rng = StdRng::seed_from_u64(1);
        let mut messages = 0;
        for kind in 0..8 {
            for _ in 0..1000 {
                let msg = random_msg(&mut rng, kind);
                for (payload, ros2, ser) in [(ros1::encode(&msg), false, Serialization::Ros1), (cdr::encode(&msg), true, Serialization::Cdr)] {
                    let decoded = decode_message(&payload, &msg.type_name(ros2), ser).map_err(|e| format!("{msg:?}: {e}"))?;
                    let ok = match (&msg, decoded) {
                        (Msg::Image { data, .. } | Msg::CompressedImage { data, .. }, Decoded::Image(img)) => &img.frame.bytes == data,
                        (_, Decoded::Sample(s)) => bits(&s.vector) == bits(&msg.expected_vector()),
                        _ => false,
                    };
                    ensure!(ok, "{ser:?} round-trip of {msg:?}");
                    messages += 1;
                }
            }
        }
        Ok(format!("5 adapters bit-exact, {} bit flips caught, {messages} messages", shard.len() * 8))
    }
}

mod prefetch {
    use super::*;
    use seglab_formats::reassemble::{ChunkSource, PrefetchConfig, PrefetchReader};

    struct Synthetic {
        timestamps: Vec<Vec<f64>>,
        chunk: Vec<usize>,
        delay: Duration,
    }

    fn sample(stream: usize, index: usize) -> Vec<u8> {
        let n = 1 + (index * 5 + stream) % 11;
        (0..n).map(|i| (index * 17 + stream * 89 + i) as u8).collect()
    }

    impl ChunkSource for Synthetic {
        fn stream_count(&self) -> usize {
            self.timestamps.len()
        }
        fn timestamps(&self, stream: usize) -> &[f64] {
            &self.timestamps[stream]
        }
        fn chunk_len(&self, stream: usize) -> usize {
            self.chunk[stream]
        }
        fn read_chunk(&self, stream: usize, chunk: usize) -> seglab_formats::Result<Vec<Vec<u8>>> {
            std::thread::sleep(self.delay);
            let n = self.timestamps[stream].len();
            let a = chunk * self.chunk[stream];
            Ok((a..(a + self.chunk[stream]).min(n)).map(|i| sample(stream, i)).collect())
        }
    }

    fn source(lens: &[usize], chunk: &[usize], delay: Duration) -> Synthetic {
        Synthetic {
            timestamps: lens.iter().map(|&n| (0..n).map(|k| k as f64 * 0.02).collect()).collect(),
            chunk: chunk.to_vec(),
            delay,
        }
    }

    pub fn transparency() -> Outcome {
        let lens = [500, 120, 260];
        let mut rng = StdRng::seed_from_u64(4);
        let mut accesses = 0;
        for (seq, config) in [
            PrefetchConfig::default(),
            PrefetchConfig { capacity: 9, ahead: 3, behind: 1 },
            PrefetchConfig { capacity: 1, ahead: 0, behind: 0 },
        ]
        .into_iter()
        .enumerate()
        {
            let reader = PrefetchReader::new(source(&lens, &[16, 5, 33], Duration::ZERO), config).map_err(|e| e.to_string())?;
            let mut pos = [0usize; 3];
            for _ in 0..1000 {
                let s = rng.gen_range(0..3);
                pos[s] = match rng.gen_range(0..10) {
                    0..=6 => (pos[s] + 1).min(lens[s] - 1),
                    7 => pos[s].saturating_sub(rng.gen_range(1..10)),
                    _ => rng.gen_range(0..lens[s]),
                };
                let got = reader.read_index(s, pos[s]).map_err(|e| e.to_string())?;
                ensure!(got.data == sample(s, pos[s]), "sequence {seq}: stream {s} sample {} differs", pos[s]);
                ensure!(reader.resident().len() <= config.capacity, "sequence {seq}: residency over capacity");
                accesses += 1;
            }
            let max = reader.stats().max_resident;
            ensure!(max <= config.capacity, "sequence {seq}: peak residency {max} > {}", config.capacity);
        }

        let len = 600;
        let reader = PrefetchReader::new(source(&[len], &[16], Duration::from_millis(15)), PrefetchConfig::default()).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let mut ready = 0;
        for i in 0..len {
            let r = reader.read_index(0, i).map_err(|e| e.to_string())?;
            ensure!(r.data == sample(0, i), "playback sample {i} differs");
            ready += r.hit as usize;
            if let Some(wait) = (start + Duration::from_millis(4 * (i as u64 + 1))).checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        let rate = ready as f64 / len as f64;
        ensure!(rate >= 0.9, "readiness {rate:.3}");
        Ok(format!("{accesses} accesses exact, readiness {:.1}%", rate * 100.0))
    }
}
