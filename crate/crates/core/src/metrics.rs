//! Agreement between two annotators.
//!
//! * Agreement `A`: fraction of `[0, T]` on which both label functions agree,
//!   integrated exactly over the merged breakpoints.
//! * Boundary distance `D(a→b)`: mean, over the boundaries of `a`, of the
//!   distance to the nearest boundary of `b`. `D_sym` averages both
//!   directions.
//!
//! Multi-episode comparisons concatenate each annotator's episodes into one
//! long sequence before measuring, so longer recordings weigh more.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::annotation::AnnotationFile;
use crate::model::{AnnotationSegment, EpisodeAnnotation, LabelTimeline, ModelError, Seconds};
use crate::sync::nearest_index;

/// Boundaries closer than this are the same boundary.
pub const BOUNDARY_EPSILON: Seconds = 1e-6;

const DURATION_TOLERANCE: Seconds = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("timeline durations differ: {0} vs {1}")]
    DurationMismatch(Seconds, Seconds),
    #[error("total duration is zero")]
    ZeroDuration,
    #[error("boundary set is empty")]
    EmptyBoundarySet,
    #[error("cannot merge: {0}")]
    CannotMerge(String),
    #[error("annotation files share no episodes")]
    DisjointEpisodes,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exact continuous-time agreement of two timelines over the same duration.
pub fn agreement(a: &LabelTimeline, b: &LabelTimeline) -> Result<f64, MetricsError> {
    let (ta, tb) = (a.duration(), b.duration());
    if (ta - tb).abs() > DURATION_TOLERANCE {
        return Err(MetricsError::DurationMismatch(ta, tb));
    }
    if ta <= 0.0 {
        return Err(MetricsError::ZeroDuration);
    }
    let total = ta.max(tb);
    let (ba, la) = (a.breakpoints(), a.labels());
    let (bb, lb) = (b.breakpoints(), b.labels());
    let (mut i, mut j) = (0, 0);
    let mut cursor = 0.0;
    // summing the disagreeing spans keeps A(x, x) at exactly 1
    let mut disagree = 0.0;
    while i < la.len() && j < lb.len() {
        let end_a = if i + 1 == la.len() { total } else { ba[i + 1] };
        let end_b = if j + 1 == lb.len() { total } else { bb[j + 1] };
        let end = end_a.min(end_b);
        if la[i] != lb[j] {
            disagree += end - cursor;
        }
        cursor = end;
        if end_a <= end {
            i += 1;
        }
        if end_b <= end {
            j += 1;
        }
    }
    Ok((1.0 - disagree / total).clamp(0.0, 1.0))
}

/// Sorted boundary times with near-duplicates collapsed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySet {
    times: Vec<Seconds>,
}

impl BoundarySet {
    /// Collapses `times` so that kept values are more than `epsilon` apart,
    /// keeping the earliest of each cluster.
    pub fn from_times(mut times: Vec<Seconds>, epsilon: Seconds) -> Self {
        times.sort_by(f64::total_cmp);
        let mut kept: Vec<Seconds> = Vec::with_capacity(times.len());
        for t in times {
            if kept.last().is_none_or(|&last| t - last > epsilon) {
                kept.push(t);
            }
        }
        Self { times: kept }
    }

    /// Every segment start and end of `ann`.
    pub fn from_annotation(ann: &EpisodeAnnotation, epsilon: Seconds) -> Self {
        Self::from_times(ann.segments.iter().flat_map(|s| [s.start, s.end]).collect(), epsilon)
    }

    pub fn times(&self) -> &[Seconds] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            times: self.times.iter().map(|t| t * factor).collect(),
        }
    }
}

/// Mean distance from each boundary of `from` to the nearest boundary of `to`.
pub fn asym_boundary_distance(from: &BoundarySet, to: &BoundarySet) -> Result<Seconds, MetricsError> {
    if from.is_empty() || to.is_empty() {
        return Err(MetricsError::EmptyBoundarySet);
    }
    let sum: f64 = from
        .times
        .iter()
        .map(|&b| {
            let i = nearest_index(&to.times, b).expect("non-empty");
            (b - to.times[i]).abs()
        })
        .sum();
    Ok(sum / from.len() as f64)
}

pub fn sym_boundary_distance(a: &BoundarySet, b: &BoundarySet) -> Result<Seconds, MetricsError> {
    Ok((asym_boundary_distance(a, b)? + asym_boundary_distance(b, a)?) / 2.0)
}

/// Both directed distances and their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDistances {
    pub forward: Seconds,
    pub backward: Seconds,
    pub sym: Seconds,
}

pub fn boundary_distances(a: &BoundarySet, b: &BoundarySet) -> Result<BoundaryDistances, MetricsError> {
    let forward = asym_boundary_distance(a, b)?;
    let backward = asym_boundary_distance(b, a)?;
    Ok(BoundaryDistances {
        forward,
        backward,
        sym: (forward + backward) / 2.0,
    })
}

/// Joins episodes end to end, shifting each by the total duration of the
/// episodes before it. Returns the joined annotation and its total duration.
pub fn concatenate(parts: &[(EpisodeAnnotation, Seconds)]) -> (EpisodeAnnotation, Seconds) {
    let mut offset = 0.0;
    let mut segments = Vec::new();
    for (ann, duration) in parts {
        segments.extend(ann.segments.iter().map(|s| AnnotationSegment {
            start: s.start + offset,
            end: s.end + offset,
            ..s.clone()
        }));
        offset += duration;
    }
    let episode_id = parts.iter().map(|(a, _)| a.episode_id.as_str()).collect::<Vec<_>>().join("+");
    let annotator = parts.first().map(|(a, _)| a.annotator_id.clone()).unwrap_or_default();
    (
        EpisodeAnnotation {
            episode_id,
            annotator_id: annotator,
            segments,
        },
        offset,
    )
}

/// Averages the boundaries of two order-matched annotations into one
/// reference. Outcomes combine with logical AND.
pub fn merge_ground_truth(a: &EpisodeAnnotation, b: &EpisodeAnnotation) -> Result<EpisodeAnnotation, MetricsError> {
    if a.segments.len() != b.segments.len() {
        let k = a.segments.len().min(b.segments.len());
        return Err(MetricsError::CannotMerge(format!(
            "segment counts differ ({} vs {}); first unmatched segment is #{k}",
            a.segments.len(),
            b.segments.len()
        )));
    }
    let mut segments = Vec::with_capacity(a.segments.len());
    for (k, (x, y)) in a.segments.iter().zip(&b.segments).enumerate() {
        if x.label != y.label {
            return Err(MetricsError::CannotMerge(format!(
                "labels diverge at segment #{k}: {:?} vs {:?}",
                x.label, y.label
            )));
        }
        segments.push(AnnotationSegment {
            start: (x.start + y.start) / 2.0,
            end: (x.end + y.end) / 2.0,
            label: x.label.clone(),
            success: x.success && y.success,
        });
    }
    let merged = EpisodeAnnotation {
        episode_id: a.episode_id.clone(),
        annotator_id: format!("{}+{}", a.annotator_id, b.annotator_id),
        segments,
    };
    merged.validate(None, None)?;
    Ok(merged)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricOptions {
    /// Compare `label|outcome` instead of the label alone.
    pub include_outcome: bool,
}

fn timeline(ann: &EpisodeAnnotation, duration: Seconds, opts: MetricOptions) -> Result<LabelTimeline, ModelError> {
    if opts.include_outcome {
        LabelTimeline::with_labels(ann, duration, |s| {
            format!("{}|{}", s.label, if s.success { "success" } else { "failure" })
        })
    } else {
        LabelTimeline::from_annotation(ann, duration)
    }
}

/// Agreement of two annotations of the same episode over `[0, duration]`.
pub fn episode_agreement(a: &EpisodeAnnotation, b: &EpisodeAnnotation, duration: Seconds, opts: MetricOptions) -> Result<f64, MetricsError> {
    agreement(&timeline(a, duration, opts)?, &timeline(b, duration, opts)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeReport {
    pub episode: String,
    #[serde(rename = "T")]
    pub duration: Seconds,
    #[serde(rename = "A")]
    pub agreement_percent: Option<f64>,
    #[serde(rename = "D_forward")]
    pub d_forward: Option<Seconds>,
    #[serde(rename = "D_backward")]
    pub d_backward: Option<Seconds>,
    #[serde(rename = "D_sym")]
    pub d_sym: Option<Seconds>,
}

/// Concatenated and per-episode comparison of two annotators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub annotator_a: String,
    pub annotator_b: String,
    #[serde(rename = "T")]
    pub duration: Seconds,
    /// Agreement in percent.
    #[serde(rename = "A")]
    pub agreement_percent: f64,
    #[serde(rename = "D_forward")]
    pub d_forward: Option<Seconds>,
    #[serde(rename = "D_backward")]
    pub d_backward: Option<Seconds>,
    #[serde(rename = "D_sym")]
    pub d_sym: Option<Seconds>,
    pub episodes: Vec<EpisodeReport>,
}

impl AgreementReport {
    pub fn agreement(&self) -> f64 {
        self.agreement_percent / 100.0
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let fmt_opt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<32} {:>10} {:>9} {:>11} {:>11} {:>11}", "episode", "T [s]", "A [%]", "D_fwd [s]", "D_bwd [s]", "D_sym [s]");
        for e in &self.episodes {
            let _ = writeln!(
                out,
                "{:<32} {:>10.3} {:>9} {:>11} {:>11} {:>11}",
                e.episode,
                e.duration,
                fmt_opt(e.agreement_percent, 3),
                fmt_opt(e.d_forward, 4),
                fmt_opt(e.d_backward, 4),
                fmt_opt(e.d_sym, 4)
            );
        }
        let _ = writeln!(
            out,
            "{:<32} {:>10.3} {:>9.3} {:>11} {:>11} {:>11}",
            "(concatenated)",
            self.duration,
            self.agreement_percent,
            fmt_opt(self.d_forward, 4),
            fmt_opt(self.d_backward, 4),
            fmt_opt(self.d_sym, 4)
        );
        out
    }
}

/// Compares two annotation files over their common episodes.
///
/// Each episode's duration comes from `durations` when given, otherwise it
/// is the latest segment end in either file.
pub fn compare_files(
    a: &AnnotationFile,
    b: &AnnotationFile,
    durations: Option<&BTreeMap<String, Seconds>>,
    opts: MetricOptions,
) -> Result<AgreementReport, MetricsError> {
    let common: Vec<&String> = a.episodes.keys().filter(|k| b.episodes.contains_key(*k)).collect();
    if common.is_empty() {
        return Err(MetricsError::DisjointEpisodes);
    }
    let mut parts_a = Vec::new();
    let mut parts_b = Vec::new();
    let mut episodes = Vec::new();
    for id in common {
        let ea = a.annotation(id).expect("present");
        let eb = b.annotation(id).expect("present");
        let duration = durations
            .and_then(|d| d.get(id).copied())
            .unwrap_or_else(|| ea.last_end().max(eb.last_end()));
        let agreement_percent = if duration > 0.0 {
            Some(episode_agreement(&ea, &eb, duration, opts)? * 100.0)
        } else {
            None
        };
        let dist = boundary_distances(
            &BoundarySet::from_annotation(&ea, BOUNDARY_EPSILON),
            &BoundarySet::from_annotation(&eb, BOUNDARY_EPSILON),
        )
        .ok();
        episodes.push(EpisodeReport {
            episode: id.clone(),
            duration,
            agreement_percent,
            d_forward: dist.map(|d| d.forward),
            d_backward: dist.map(|d| d.backward),
            d_sym: dist.map(|d| d.sym),
        });
        parts_a.push((ea, duration));
        parts_b.push((eb, duration));
    }
    let (cat_a, total) = concatenate(&parts_a);
    let (cat_b, _) = concatenate(&parts_b);
    let agreement_percent = episode_agreement(&cat_a, &cat_b, total, opts)? * 100.0;
    let dist = boundary_distances(
        &BoundarySet::from_annotation(&cat_a, BOUNDARY_EPSILON),
        &BoundarySet::from_annotation(&cat_b, BOUNDARY_EPSILON),
    )
    .ok();
    Ok(AgreementReport {
        annotator_a: a.annotator.clone(),
        annotator_b: b.annotator.clone(),
        duration: total,
        agreement_percent,
        d_forward: dist.map(|d| d.forward),
        d_backward: dist.map(|d| d.backward),
        d_sym: dist.map(|d| d.sym),
        episodes,
    })
}

/// Merges two expert files episode by episode into one reference file.
pub fn merge_files(a: &AnnotationFile, b: &AnnotationFile) -> Result<AnnotationFile, MetricsError> {
    let mut out = AnnotationFile::new(a.dataset.clone(), format!("{}+{}", a.annotator, b.annotator));
    let common: Vec<&String> = a.episodes.keys().filter(|k| b.episodes.contains_key(*k)).collect();
    if common.is_empty() {
        return Err(MetricsError::DisjointEpisodes);
    }
    for id in common {
        let merged = merge_ground_truth(&a.annotation(id).unwrap(), &b.annotation(id).unwrap())
            .map_err(|e| MetricsError::CannotMerge(format!("episode {id:?}: {e}")))?;
        let description = a.episodes[id].description.clone().or_else(|| b.episodes[id].description.clone());
        out.episodes.insert(
            id.clone(),
            crate::annotation::EpisodeEntry {
                description,
                segments: merged.segments,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ann(segs: &[(f64, f64, &str)]) -> EpisodeAnnotation {
        EpisodeAnnotation::new(
            "ep",
            "a",
            segs.iter().map(|&(s, e, l)| AnnotationSegment::new(s, e, l, true)).collect(),
        )
    }

    fn tl(segs: &[(f64, f64, &str)], t: f64) -> LabelTimeline {
        LabelTimeline::from_annotation(&ann(segs), t).unwrap()
    }

    /// Midpoint-rule estimate of the agreement integral.
    fn sampled_agreement(a: &LabelTimeline, b: &LabelTimeline, n: usize) -> f64 {
        let t = a.duration();
        let hits = (0..n)
            .filter(|&k| {
                let x = (k as f64 + 0.5) * t / n as f64;
                a.label_at(x).unwrap() == b.label_at(x).unwrap()
            })
            .count();
        hits as f64 / n as f64
    }

    /// Double loop over both sets.
    fn brute_distance(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .map(|x| b.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / a.len() as f64
    }

    #[test]
    fn agreement_examples() {
        let a = tl(&[(0.0, 5.0, "grasp"), (5.0, 10.0, "lift")], 10.0);
        let b = tl(&[(0.0, 4.0, "grasp"), (4.0, 10.0, "lift")], 10.0);
        assert_eq!(agreement(&a, &a).unwrap(), 1.0);
        let got = agreement(&a, &b).unwrap();
        assert!((got - 0.9).abs() < 1e-12);
        assert!((sampled_agreement(&a, &b, 100_000) - 0.9).abs() < 1e-4);

        let c = tl(&[(0.0, 10.0, "align")], 10.0);
        assert_eq!(agreement(&a, &c).unwrap(), 0.0);

        let short = tl(&[], 9.0);
        assert!(matches!(agreement(&a, &short), Err(MetricsError::DurationMismatch(..))));
    }

    #[test]
    fn gaps_count_as_agreement() {
        let a = tl(&[(1.0, 2.0, "grasp")], 4.0);
        let b = tl(&[(1.0, 2.0, "grasp")], 4.0);
        let c = tl(&[], 4.0);
        assert_eq!(agreement(&a, &b).unwrap(), 1.0);
        assert_eq!(agreement(&a, &c).unwrap(), 0.75);
    }

    #[test]
    fn boundary_set_examples() {
        let b = BoundarySet::from_annotation(&ann(&[(0.0, 5.0, "g"), (5.0, 10.0, "l")]), BOUNDARY_EPSILON);
        assert_eq!(b.times(), &[0.0, 5.0, 10.0]);
        assert!(BoundarySet::from_annotation(&ann(&[]), BOUNDARY_EPSILON).is_empty());
        let b = BoundarySet::from_annotation(&ann(&[(0.0, 1.0, "g"), (2.0, 3.0, "l")]), BOUNDARY_EPSILON);
        assert_eq!(b.times(), &[0.0, 1.0, 2.0, 3.0]);
        let b = BoundarySet::from_times(vec![1.0, 1.0 + 5e-7, 2.0], BOUNDARY_EPSILON);
        assert_eq!(b.times(), &[1.0, 2.0]);
    }

    #[test]
    fn distance_examples() {
        let s = |v: &[f64]| BoundarySet::from_times(v.to_vec(), BOUNDARY_EPSILON);
        let a = s(&[0.0, 5.0, 10.0]);
        let b = s(&[0.0, 4.0, 10.0]);
        assert_eq!(asym_boundary_distance(&a, &a).unwrap(), 0.0);
        assert!((asym_boundary_distance(&a, &b).unwrap() - brute_distance(a.times(), b.times())).abs() < 1e-15);
        assert!((asym_boundary_distance(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(asym_boundary_distance(&s(&[7.0]), &s(&[0.0, 10.0])).unwrap(), 3.0);
        assert!((sym_boundary_distance(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let two = s(&[0.0, 10.0]);
        let three = s(&[0.0, 5.0, 10.0]);
        let want = (brute_distance(two.times(), three.times()) + brute_distance(three.times(), two.times())) / 2.0;
        assert!((want - 5.0 / 6.0).abs() < 1e-12);
        assert!((sym_boundary_distance(&two, &three).unwrap() - want).abs() < 1e-12);
        assert_eq!(asym_boundary_distance(&s(&[]), &two), Err(MetricsError::EmptyBoundarySet));
    }

    #[test]
    fn concatenate_examples() {
        let first = EpisodeAnnotation::new("e1", "a", vec![]);
        let second = EpisodeAnnotation::new("e2", "a", vec![AnnotationSegment::new(1.0, 2.0, "g", true)]);
        let (cat, total) = concatenate(&[(first.clone(), 10.0), (second, 10.0)]);
        assert_eq!(total, 20.0);
        assert_eq!(cat.segments, vec![AnnotationSegment::new(11.0, 12.0, "g", true)]);

        let (single, t) = concatenate(&[(ann(&[(1.0, 2.0, "g")]), 5.0)]);
        assert_eq!(single.segments, ann(&[(1.0, 2.0, "g")]).segments);
        assert_eq!(t, 5.0);

        let (empty, t) = concatenate(&[]);
        assert!(empty.segments.is_empty());
        assert_eq!(t, 0.0);
    }

    #[test]
    fn merge_examples() {
        let a = ann(&[(1.0, 2.0, "grasp")]);
        let b = ann(&[(1.2, 2.2, "grasp")]);
        let m = merge_ground_truth(&a, &b).unwrap();
        assert!((m.segments[0].start - 1.1).abs() < 1e-12);
        assert!((m.segments[0].end - 2.1).abs() < 1e-12);
        assert_eq!(merge_ground_truth(&a, &a).unwrap().segments, a.segments);
        let c = ann(&[(1.0, 2.0, "lift")]);
        assert!(matches!(merge_ground_truth(&a, &c), Err(MetricsError::CannotMerge(m)) if m.contains("#0")));
        let d = ann(&[(1.0, 2.0, "grasp"), (3.0, 4.0, "lift")]);
        assert!(matches!(merge_ground_truth(&a, &d), Err(MetricsError::CannotMerge(_))));
    }

    #[test]
    fn outcome_can_join_the_label() {
        let a = EpisodeAnnotation::new("e", "a", vec![AnnotationSegment::new(0.0, 10.0, "g", true)]);
        let b = EpisodeAnnotation::new("e", "b", vec![AnnotationSegment::new(0.0, 10.0, "g", false)]);
        assert_eq!(episode_agreement(&a, &b, 10.0, MetricOptions::default()).unwrap(), 1.0);
        assert_eq!(episode_agreement(&a, &b, 10.0, MetricOptions { include_outcome: true }).unwrap(), 0.0);
    }

    #[test]
    fn compare_hand_built_files() {
        let mut fa = AnnotationFile::new("d", "a");
        let mut fb = AnnotationFile::new("d", "b");
        let entry = |segs: &[(f64, f64, &str)]| crate::annotation::EpisodeEntry {
            description: None,
            segments: ann(segs).segments,
        };
        fa.episodes.insert("e".into(), entry(&[(0.0, 5.0, "grasp"), (5.0, 10.0, "lift")]));
        fb.episodes.insert("e".into(), entry(&[(0.0, 4.0, "grasp"), (4.0, 10.0, "lift")]));
        let r = compare_files(&fa, &fb, None, MetricOptions::default()).unwrap();
        assert!((r.agreement_percent - 90.0).abs() < 1e-9);
        assert!((r.d_sym.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.duration, 10.0);
        let self_cmp = compare_files(&fa, &fa, None, MetricOptions::default()).unwrap();
        assert_eq!(self_cmp.agreement_percent, 100.0);
        assert_eq!(self_cmp.d_sym, Some(0.0));
        fb.episodes.clear();
        fb.episodes.insert("other".into(), entry(&[]));
        assert_eq!(compare_files(&fa, &fb, None, MetricOptions::default()), Err(MetricsError::DisjointEpisodes));
    }

    fn arb_pair() -> impl Strategy<Value = (EpisodeAnnotation, EpisodeAnnotation, f64)> {
        let side = || prop::collection::vec((0u32..8, 1u32..8, 0usize..3), 0..8);
        (side(), side()).prop_map(|(x, y)| {
            let build = |raw: Vec<(u32, u32, usize)>| {
                let mut t = 0.0;
                let segs = raw
                    .into_iter()
                    .map(|(g, l, k)| {
                        let s = t + g as f64 * 0.5;
                        t = s + l as f64 * 0.25;
                        AnnotationSegment::new(s, t, ["grasp", "lift", "align"][k], true)
                    })
                    .collect::<Vec<_>>();
                (EpisodeAnnotation::new("e", "x", segs), t)
            };
            let (a, ta) = build(x);
            let (b, tb) = build(y);
            (a, b, ta.max(tb) + 1.0)
        })
    }

    proptest! {
        #[test]
        fn exact_matches_sampling((a, b, t) in arb_pair()) {
            let (ta, tb) = (LabelTimeline::from_annotation(&a, t).unwrap(), LabelTimeline::from_annotation(&b, t).unwrap());
            let n = 4000;
            let exact = agreement(&ta, &tb).unwrap();
            prop_assert!((exact - sampled_agreement(&ta, &tb, n)).abs() <= 2.0 / n as f64 * t);
            prop_assert!((0.0..=1.0).contains(&exact));
            prop_assert_eq!(exact, agreement(&tb, &ta).unwrap());
        }

        #[test]
        fn distance_matches_brute_force((a, b, _t) in arb_pair()) {
            let (sa, sb) = (BoundarySet::from_annotation(&a, BOUNDARY_EPSILON), BoundarySet::from_annotation(&b, BOUNDARY_EPSILON));
            prop_assume!(!sa.is_empty() && !sb.is_empty());
            let d = asym_boundary_distance(&sa, &sb).unwrap();
            prop_assert!((d - brute_distance(sa.times(), sb.times())).abs() < 1e-9);
            prop_assert_eq!(sym_boundary_distance(&sa, &sb).unwrap(), sym_boundary_distance(&sb, &sa).unwrap());
        }
    }
}
