//! Format-independent episode and annotation types.
//!
//! All times are `f64` seconds relative to the start of the episode. Adapters
//! subtract their own epoch before constructing any of these values.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds relative to the episode start.
pub type Seconds = f64;

/// Label used for time not covered by any segment.
pub const UNLABELED: &str = "∅";

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("segments {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("segment {index} is invalid: {violations:?}")]
    InvalidSegment {
        index: usize,
        violations: Vec<Violation>,
    },
    #[error("time {t} is outside [0, {duration}]")]
    OutOfRange { t: Seconds, duration: Seconds },
    #[error("stream {0:?}: timestamps must be non-decreasing")]
    UnsortedTimestamps(String),
    #[error("channel {name:?}: {rows} value rows for {timestamps} timestamps")]
    ShapeMismatch {
        name: String,
        rows: usize,
        timestamps: usize,
    },
    #[error("duplicate stream name {0:?}")]
    DuplicateName(String),
    #[error("episode has neither cameras nor channels")]
    NoStreams,
}

/// Locates a camera's frames inside the dataset that produced it.
///
/// Only the adapter that created the locator knows how to interpret it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraStream {
    pub name: String,
    pub frame_timestamps: Vec<Seconds>,
    pub source_ref: SourceRef,
}

impl CameraStream {
    pub fn new(name: impl Into<String>, frame_timestamps: Vec<Seconds>, source_ref: SourceRef) -> Result<Self, ModelError> {
        let name = name.into();
        check_sorted(&name, &frame_timestamps)?;
        Ok(Self {
            name,
            frame_timestamps,
            source_ref,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_timestamps.len()
    }
}

/// A named multi-dimensional signal. `values` is frame-major: row `i` holds
/// the `dims` values sampled at `timestamps[i]`. NaN marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesChannel {
    pub name: String,
    pub unit: String,
    pub dim_labels: Vec<String>,
    pub timestamps: Vec<Seconds>,
    pub values: Vec<f64>,
}

impl TimeSeriesChannel {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        dim_labels: Vec<String>,
        timestamps: Vec<Seconds>,
        values: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        check_sorted(&name, &timestamps)?;
        let dims = dim_labels.len().max(1);
        if values.len() != timestamps.len() * dims || dim_labels.is_empty() {
            return Err(ModelError::ShapeMismatch {
                rows: values.len() / dims,
                timestamps: timestamps.len(),
                name,
            });
        }
        Ok(Self {
            name,
            unit: unit.into(),
            dim_labels,
            timestamps,
            values,
        })
    }

    pub fn dims(&self) -> usize {
        self.dim_labels.len()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn row(&self, index: usize) -> &[f64] {
        let d = self.dims();
        &self.values[index * d..(index + 1) * d]
    }
}

fn check_sorted(name: &str, ts: &[Seconds]) -> Result<(), ModelError> {
    if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(ModelError::UnsortedTimestamps(name.to_string()));
    }
    Ok(())
}

/// One demonstration, as seen by every consumer regardless of storage format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub duration: Seconds,
    pub cameras: Vec<CameraStream>,
    pub channels: Vec<TimeSeriesChannel>,
    pub description: Option<String>,
}

impl Episode {
    /// Builds an episode and derives its duration from the last timestamp of
    /// every stream.
    pub fn new(
        id: impl Into<String>,
        cameras: Vec<CameraStream>,
        channels: Vec<TimeSeriesChannel>,
        description: Option<String>,
    ) -> Result<Self, ModelError> {
        if cameras.is_empty() && channels.is_empty() {
            return Err(ModelError::NoStreams);
        }
        let mut names = HashSet::new();
        for n in cameras.iter().map(|c| &c.name).chain(channels.iter().map(|c| &c.name)) {
            if !names.insert(n.as_str()) {
                return Err(ModelError::DuplicateName(n.clone()));
            }
        }
        let duration = cameras
            .iter()
            .filter_map(|c| c.frame_timestamps.last())
            .chain(channels.iter().filter_map(|c| c.timestamps.last()))
            .fold(0.0_f64, |acc, &t| acc.max(t));
        Ok(Self {
            id: id.into(),
            duration,
            cameras,
            channels,
            description: description.filter(|d| !d.is_empty()),
        })
    }

    pub fn camera(&self, name: &str) -> Option<&CameraStream> {
        self.cameras.iter().find(|c| c.name == name)
    }

    pub fn channel(&self, name: &str) -> Option<&TimeSeriesChannel> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// One labelled action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSegment {
    pub start: Seconds,
    pub end: Seconds,
    pub label: String,
    pub success: bool,
}

impl AnnotationSegment {
    pub fn new(start: Seconds, end: Seconds, label: impl Into<String>, success: bool) -> Self {
        Self {
            start,
            end,
            label: label.into(),
            success,
        }
    }

    pub fn overlaps(&self, other: &AnnotationSegment) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NonFinite,
    NegativeStart,
    EmptyInterval,
    EndExceedsDuration,
    EmptyLabel,
    ReservedLabel,
    UnknownLabel(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite => f.write_str("non-finite time"),
            Violation::NegativeStart => f.write_str("start before episode start"),
            Violation::EmptyInterval => f.write_str("empty interval"),
            Violation::EndExceedsDuration => f.write_str("end exceeds duration"),
            Violation::EmptyLabel => f.write_str("empty label"),
            Violation::ReservedLabel => write!(f, "label {UNLABELED:?} is reserved"),
            Violation::UnknownLabel(l) => write!(f, "unknown label {l:?}"),
        }
    }
}

/// Lists everything wrong with `seg`. An empty list means the segment is valid.
///
/// `duration` and `labels` are optional so the same check serves annotation
/// files, which carry neither.
pub fn validate_segment(seg: &AnnotationSegment, duration: Option<Seconds>, labels: Option<&[String]>) -> Vec<Violation> {
    let mut out = Vec::new();
    if !seg.start.is_finite() || !seg.end.is_finite() {
        out.push(Violation::NonFinite);
        return out;
    }
    if seg.start < 0.0 {
        out.push(Violation::NegativeStart);
    }
    if seg.start >= seg.end {
        out.push(Violation::EmptyInterval);
    }
    if let Some(d) = duration {
        if seg.end > d {
            out.push(Violation::EndExceedsDuration);
        }
    }
    if seg.label.is_empty() {
        out.push(Violation::EmptyLabel);
    } else if seg.label == UNLABELED {
        out.push(Violation::ReservedLabel);
    } else if let Some(set) = labels {
        if !set.iter().any(|l| l == &seg.label) {
            out.push(Violation::UnknownLabel(seg.label.clone()));
        }
    }
    out
}

/// All segments of one annotator for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeAnnotation {
    pub episode_id: String,
    pub annotator_id: String,
    pub segments: Vec<AnnotationSegment>,
}

impl EpisodeAnnotation {
    pub fn new(episode_id: impl Into<String>, annotator_id: impl Into<String>, mut segments: Vec<AnnotationSegment>) -> Self {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        Self {
            episode_id: episode_id.into(),
            annotator_id: annotator_id.into(),
            segments,
        }
    }

    /// Checks every segment and pairwise disjointness. Segments must already
    /// be sorted by start.
    pub fn validate(&self, duration: Option<Seconds>, labels: Option<&[String]>) -> Result<(), ModelError> {
        for (index, seg) in self.segments.iter().enumerate() {
            let violations = validate_segment(seg, duration, labels);
            if !violations.is_empty() {
                return Err(ModelError::InvalidSegment { index, violations });
            }
        }
        first_overlap(&self.segments).map_or(Ok(()), |(first, second)| Err(ModelError::Overlap { first, second }))
    }

    /// Latest segment end, used as the annotated duration when none is known.
    pub fn last_end(&self) -> Seconds {
        self.segments.iter().map(|s| s.end).fold(0.0, f64::max)
    }
}

/// First pair of overlapping segments in a start-sorted list.
pub fn first_overlap(segments: &[AnnotationSegment]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&a, &b| segments[a].start.total_cmp(&segments[b].start));
    order
        .windows(2)
        .find(|w| segments[w[0]].overlaps(&segments[w[1]]))
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

/// Piecewise-constant label function over `[0, T]`.
///
/// Interval `i` is `[breakpoints[i], breakpoints[i + 1])`, except the last
/// interval which also contains `T`. `None` is the unlabelled span.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTimeline {
    breakpoints: Vec<Seconds>,
    labels: Vec<Option<String>>,
}

impl LabelTimeline {
    /// Builds the timeline for `ann` over `[0, duration]`.
    pub fn from_annotation(ann: &EpisodeAnnotation, duration: Seconds) -> Result<Self, ModelError> {
        Self::with_labels(ann, duration, |s| s.label.clone())
    }

    /// Like [`LabelTimeline::from_annotation`] but labels each segment with
    /// `label_of(segment)`.
    pub fn with_labels(
        ann: &EpisodeAnnotation,
        duration: Seconds,
        label_of: impl Fn(&AnnotationSegment) -> String,
    ) -> Result<Self, ModelError> {
        let mut segs: Vec<&AnnotationSegment> = ann.segments.iter().collect();
        segs.sort_by(|a, b| a.start.total_cmp(&b.start));
        for (index, seg) in ann.segments.iter().enumerate() {
            let violations = validate_segment(seg, Some(duration), None);
            if !violations.is_empty() {
                return Err(ModelError::InvalidSegment { index, violations });
            }
        }
        if let Some((first, second)) = first_overlap(&ann.segments) {
            return Err(ModelError::Overlap { first, second });
        }

        let mut breakpoints = vec![0.0];
        let mut labels = Vec::new();
        let mut push = |until: Seconds, label: Option<String>| {
            let last = *breakpoints.last().unwrap();
            if until > last {
                breakpoints.push(until);
                labels.push(label);
            }
        };
        for seg in segs {
            push(seg.start, None);
            push(seg.end, Some(label_of(seg)));
        }
        push(duration, None);
        if labels.is_empty() {
            // zero duration
            breakpoints.push(duration);
            labels.push(None);
        }
        Ok(Self { breakpoints, labels })
    }

    pub fn duration(&self) -> Seconds {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[Seconds] {
        &self.breakpoints
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// Iterates `(start, end, label)` for every interval.
    pub fn intervals(&self) -> impl Iterator<Item = (Seconds, Seconds, Option<&str>)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.labels)
            .map(|(w, l)| (w[0], w[1], l.as_deref()))
    }

    /// Label in effect at `t`; `None` for unlabelled time.
    pub fn label_at(&self, t: Seconds) -> Result<Option<&str>, ModelError> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(ModelError::OutOfRange { t, duration });
        }
        // first breakpoint strictly greater than t, minus one
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        let interval = idx.saturating_sub(1).min(self.labels.len() - 1);
        Ok(self.labels[interval].as_deref())
    }

    /// Recovers `(start, end, label)` triples by merging adjacent equal labels
    /// and dropping unlabelled spans.
    pub fn to_segments(&self) -> Vec<(Seconds, Seconds, String)> {
        let mut out: Vec<(Seconds, Seconds, String)> = Vec::new();
        for (start, end, label) in self.intervals() {
            let Some(label) = label else { continue };
            match out.last_mut() {
                Some(last) if last.1 == start && last.2 == label => last.1 = end,
                _ => out.push((start, end, label.to_string())),
            }
        }
        out
    }
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

    #[test]
    fn validate_segment_examples() {
        let labels = vec!["grasp".to_string()];
        let ok = AnnotationSegment::new(1.0, 2.0, "grasp", true);
        assert!(validate_segment(&ok, Some(10.0), Some(&labels)).is_empty());

        let empty = AnnotationSegment::new(2.0, 2.0, "grasp", true);
        assert_eq!(validate_segment(&empty, Some(10.0), Some(&labels)), vec![Violation::EmptyInterval]);

        let long = AnnotationSegment::new(1.0, 11.0, "grasp", true);
        assert_eq!(validate_segment(&long, Some(10.0), Some(&labels)), vec![Violation::EndExceedsDuration]);

        let unknown = AnnotationSegment::new(1.0, 2.0, "juggle", true);
        assert_eq!(
            validate_segment(&unknown, Some(10.0), Some(&labels)),
            vec![Violation::UnknownLabel("juggle".into())]
        );
    }

    #[test]
    fn timeline_two_adjacent_segments() {
        let tl = LabelTimeline::from_annotation(&ann(&[(0.0, 5.0, "grasp"), (5.0, 10.0, "lift")]), 10.0).unwrap();
        assert_eq!(tl.breakpoints(), &[0.0, 5.0, 10.0]);
        assert_eq!(tl.labels(), &[Some("grasp".into()), Some("lift".into())]);
    }

    #[test]
    fn timeline_empty_annotation() {
        let tl = LabelTimeline::from_annotation(&ann(&[]), 4.0).unwrap();
        assert_eq!(tl.breakpoints(), &[0.0, 4.0]);
        assert_eq!(tl.labels(), &[None]);
    }

    #[test]
    fn timeline_single_inner_segment() {
        let tl = LabelTimeline::from_annotation(&ann(&[(1.0, 2.0, "align")]), 3.0).unwrap();
        assert_eq!(tl.breakpoints(), &[0.0, 1.0, 2.0, 3.0]);
        // point-sampling oracle
        for (t, want) in [(0.5, None), (1.5, Some("align")), (2.5, None)] {
            assert_eq!(tl.label_at(t).unwrap(), want);
        }
        assert_eq!(tl.label_at(2.0).unwrap(), None);
        assert_eq!(tl.label_at(3.0).unwrap(), None);
        assert_eq!(tl.label_at(1.0).unwrap(), Some("align"));
        assert!(matches!(tl.label_at(3.0001), Err(ModelError::OutOfRange { .. })));
        assert!(matches!(tl.label_at(-0.1), Err(ModelError::OutOfRange { .. })));
    }

    #[test]
    fn timeline_rejects_overlap() {
        let err = LabelTimeline::from_annotation(&ann(&[(0.0, 5.0, "grasp"), (4.0, 6.0, "lift")]), 10.0).unwrap_err();
        assert_eq!(err, ModelError::Overlap { first: 0, second: 1 });
    }

    #[test]
    fn episode_duration_is_latest_timestamp() {
        let cam = CameraStream::new("cam", vec![0.0, 0.5, 1.0], SourceRef("x".into())).unwrap();
        let ch = TimeSeriesChannel::new("f", "N", vec!["x".into()], vec![0.0, 2.5], vec![1.0, 2.0]).unwrap();
        let ep = Episode::new("e", vec![cam], vec![ch], Some(String::new())).unwrap();
        assert_eq!(ep.duration, 2.5);
        assert_eq!(ep.description, None);
        assert_eq!(Episode::new("e", vec![], vec![], None).unwrap_err(), ModelError::NoStreams);
    }

    #[test]
    fn channel_shape_checked() {
        let err = TimeSeriesChannel::new("w", "N", vec!["x".into(), "y".into()], vec![0.0, 1.0], vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, ModelError::ShapeMismatch { .. }));
        let err = TimeSeriesChannel::new("w", "N", vec!["x".into()], vec![1.0, 0.0], vec![1.0; 2]).unwrap_err();
        assert!(matches!(err, ModelError::UnsortedTimestamps(_)));
    }

    /// Random disjoint segments on an integer-ish grid plus a duration that
    /// covers them. Touching neighbours always carry different labels so the
    /// timeline round-trip is lossless.
    fn arb_annotation() -> impl Strategy<Value = (EpisodeAnnotation, f64)> {
        (prop::collection::vec((0u32..20, 1u32..20, 0usize..4, any::<bool>()), 0..12), 0u32..20).prop_map(|(raw, tail)| {
            let names = ["grasp", "lift", "align", "release"];
            let mut t = 0.0;
            let mut segs: Vec<AnnotationSegment> = Vec::new();
            for (gap, len, label, touching) in raw {
                let gap = if touching { 0.0 } else { gap as f64 * 0.25 };
                let mut label = names[label];
                if gap == 0.0 {
                    if let Some(prev) = segs.last() {
                        if prev.label == label {
                            label = names[(names.iter().position(|n| *n == label).unwrap() + 1) % 4];
                        }
                    }
                }
                let start = t + gap;
                let end = start + len as f64 * 0.125;
                segs.push(AnnotationSegment::new(start, end, label, true));
                t = end;
            }
            (EpisodeAnnotation::new("ep", "a", segs), t + tail as f64 * 0.5)
        })
    }

    fn linear_scan(ann: &EpisodeAnnotation, t: f64, duration: f64) -> Option<String> {
        // the last interval is closed at T
        ann.segments
            .iter()
            .find(|s| (s.start <= t && t < s.end) || (t == duration && s.end == duration && s.start < t))
            .map(|s| s.label.clone())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn intervals_partition_duration((a, duration) in arb_annotation()) {
            let tl = LabelTimeline::from_annotation(&a, duration).unwrap();
            let total: f64 = tl.intervals().map(|(s, e, _)| e - s).sum();
            prop_assert!((total - duration).abs() <= 1e-9);
            prop_assert_eq!(tl.breakpoints()[0], 0.0);
            prop_assert_eq!(tl.duration(), duration);
        }

        #[test]
        fn label_at_matches_linear_scan((a, duration) in arb_annotation(), frac in 0.0f64..=1.0) {
            let tl = LabelTimeline::from_annotation(&a, duration).unwrap();
            let t = frac * duration;
            prop_assert_eq!(tl.label_at(t).unwrap().map(str::to_string), linear_scan(&a, t, duration));
            // also probe every boundary exactly
            for s in &a.segments {
                for b in [s.start, s.end] {
                    prop_assert_eq!(tl.label_at(b).unwrap().map(str::to_string), linear_scan(&a, b, duration));
                }
            }
        }

        #[test]
        fn timeline_round_trips_segments((a, duration) in arb_annotation()) {
            let tl = LabelTimeline::from_annotation(&a, duration).unwrap();
            let back = tl.to_segments();
            let want: Vec<_> = a.segments.iter().map(|s| (s.start, s.end, s.label.clone())).collect();
            prop_assert_eq!(back, want);
        }
    }
}
