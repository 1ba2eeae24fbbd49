//! Annotation sessions and the on-disk annotation file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{first_overlap, validate_segment, AnnotationSegment, EpisodeAnnotation, Seconds, Violation};

pub const FILE_VERSION: &str = "1.0";

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("a segment is already pending (started at {0})")]
    AlreadyPending(Seconds),
    #[error("no segment is pending")]
    NotPending,
    #[error("time {t} is outside [0, {duration}]")]
    OutOfRange { t: Seconds, duration: Seconds },
    #[error("segment is invalid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("segment overlaps existing segment {index} [{start}, {end})")]
    Overlap { index: usize, start: Seconds, end: Seconds },
    #[error("no segment at index {0}")]
    BadIndex(usize),
}

/// Partial update applied by [`AnnotationSession::edit_segment`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentPatch {
    pub start: Option<Seconds>,
    pub end: Option<Seconds>,
    pub label: Option<String>,
    pub success: Option<bool>,
}

/// Editing state of one annotator on one episode.
///
/// Every mutating call either succeeds or leaves the session untouched, so
/// committed segments are always valid and pairwise disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSession {
    episode_id: String,
    annotator_id: String,
    duration: Seconds,
    label_set: Vec<String>,
    description: Option<String>,
    segments: Vec<AnnotationSegment>,
    pending_start: Option<Seconds>,
    dirty: bool,
}

impl AnnotationSession {
    pub fn new(episode_id: impl Into<String>, annotator_id: impl Into<String>, duration: Seconds, label_set: Vec<String>) -> Self {
        Self {
            episode_id: episode_id.into(),
            annotator_id: annotator_id.into(),
            duration,
            label_set,
            description: None,
            segments: Vec::new(),
            pending_start: None,
            dirty: false,
        }
    }

    /// Resumes a session from stored segments, validating them against this
    /// episode's duration and label set.
    pub fn with_segments(mut self, segments: Vec<AnnotationSegment>) -> Result<Self, SessionError> {
        self.set_segments(segments)?;
        self.dirty = false;
        Ok(self)
    }

    pub fn with_description(mut self, description: Option<String>) -> Self {
        self.description = description;
        self
    }

    pub fn episode_id(&self) -> &str {
        &self.episode_id
    }

    pub fn annotator_id(&self) -> &str {
        &self.annotator_id
    }

    pub fn duration(&self) -> Seconds {
        self.duration
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    pub fn segments(&self) -> &[AnnotationSegment] {
        &self.segments
    }

    pub fn pending_start(&self) -> Option<Seconds> {
        self.pending_start
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn mark_saved(&mut self) {
        self.dirty = false;
    }

    pub fn annotation(&self) -> EpisodeAnnotation {
        EpisodeAnnotation::new(self.episode_id.clone(), self.annotator_id.clone(), self.segments.clone())
    }

    fn check_time(&self, t: Seconds) -> Result<(), SessionError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(SessionError::OutOfRange { t, duration: self.duration });
        }
        Ok(())
    }

    pub fn begin_segment(&mut self, t: Seconds) -> Result<(), SessionError> {
        if let Some(p) = self.pending_start {
            return Err(SessionError::AlreadyPending(p));
        }
        self.check_time(t)?;
        self.pending_start = Some(t);
        Ok(())
    }

    /// Span between the pending start and the playhead, ordered.
    pub fn live_span(&self, playhead: Seconds) -> Option<(Seconds, Seconds)> {
        self.pending_start.map(|p| (p.min(playhead), p.max(playhead)))
    }

    pub fn cancel(&mut self) {
        self.pending_start = None;
    }

    /// Commits the pending span ending at `t`. The endpoints are ordered, so
    /// the end may be marked before the start. On error the pending start is
    /// kept so the user can correct and retry.
    pub fn end_segment(&mut self, t: Seconds, label: &str, success: bool) -> Result<AnnotationSegment, SessionError> {
        let pending = self.pending_start.ok_or(SessionError::NotPending)?;
        self.check_time(t)?;
        let seg = AnnotationSegment::new(pending.min(t), pending.max(t), label, success);
        self.check_candidate(&seg, None)?;
        self.insert(seg.clone());
        self.pending_start = None;
        Ok(seg)
    }

    pub fn edit_segment(&mut self, index: usize, patch: &SegmentPatch) -> Result<(), SessionError> {
        let current = self.segments.get(index).ok_or(SessionError::BadIndex(index))?;
        let mut seg = current.clone();
        if let Some(s) = patch.start {
            seg.start = s;
        }
        if let Some(e) = patch.end {
            seg.end = e;
        }
        if let Some(l) = &patch.label {
            seg.label = l.clone();
        }
        if let Some(ok) = patch.success {
            seg.success = ok;
        }
        self.check_candidate(&seg, Some(index))?;
        self.segments.remove(index);
        self.insert(seg);
        Ok(())
    }

    pub fn delete_segment(&mut self, index: usize) -> Result<AnnotationSegment, SessionError> {
        if index >= self.segments.len() {
            return Err(SessionError::BadIndex(index));
        }
        self.dirty = true;
        Ok(self.segments.remove(index))
    }

    /// Replaces every segment at once. Rejected lists leave the session as is.
    pub fn set_segments(&mut self, mut segments: Vec<AnnotationSegment>) -> Result<(), SessionError> {
        for seg in &segments {
            let v = validate_segment(seg, Some(self.duration), Some(&self.label_set));
            if !v.is_empty() {
                return Err(SessionError::Invalid(v));
            }
        }
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        if let Some((a, b)) = first_overlap(&segments) {
            return Err(SessionError::Overlap {
                index: a,
                start: segments[b].start,
                end: segments[b].end,
            });
        }
        self.segments = segments;
        self.dirty = true;
        Ok(())
    }

    fn check_candidate(&self, seg: &AnnotationSegment, skip: Option<usize>) -> Result<(), SessionError> {
        let v = validate_segment(seg, Some(self.duration), Some(&self.label_set));
        if !v.is_empty() {
            return Err(SessionError::Invalid(v));
        }
        for (index, other) in self.segments.iter().enumerate() {
            if Some(index) != skip && seg.overlaps(other) {
                return Err(SessionError::Overlap {
                    index,
                    start: other.start,
                    end: other.end,
                });
            }
        }
        Ok(())
    }

    fn insert(&mut self, seg: AnnotationSegment) {
        let at = self.segments.partition_point(|s| s.start < seg.start);
        self.segments.insert(at, seg);
        self.dirty = true;
    }
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported version {0:?}, expected {FILE_VERSION:?}")]
    Version(String),
    #[error("episode {episode:?} segment {index}: {message}")]
    Segment { episode: String, index: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeEntry {
    #[serde(default)]
    pub description: Option<String>,
    pub segments: Vec<AnnotationSegment>,
}

/// All annotations of one annotator for one dataset.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub version: String,
    pub dataset: String,
    pub annotator: String,
    pub episodes: BTreeMap<String, EpisodeEntry>,
}

impl AnnotationFile {
    pub fn new(dataset: impl Into<String>, annotator: impl Into<String>) -> Self {
        Self {
            version: FILE_VERSION.into(),
            dataset: dataset.into(),
            annotator: annotator.into(),
            episodes: BTreeMap::new(),
        }
    }

    pub fn from_sessions<'a>(dataset: impl Into<String>, annotator: impl Into<String>, sessions: impl IntoIterator<Item = &'a AnnotationSession>) -> Self {
        let mut file = Self::new(dataset, annotator);
        for s in sessions {
            file.upsert_session(s);
        }
        file
    }

    pub fn upsert_session(&mut self, session: &AnnotationSession) {
        self.episodes.insert(
            session.episode_id.clone(),
            EpisodeEntry {
                description: session.description.clone(),
                segments: session.segments.clone(),
            },
        );
    }

    pub fn annotation(&self, episode_id: &str) -> Option<EpisodeAnnotation> {
        self.episodes
            .get(episode_id)
            .map(|e| EpisodeAnnotation::new(episode_id, self.annotator.clone(), e.segments.clone()))
    }

    /// Parses and validates annotation JSON.
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: AnnotationFile = serde_path_to_error::deserialize(de).map_err(|e| FileError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    /// Every problem in annotation JSON, not just the first. Fails only when
    /// the text does not match the schema at all.
    pub fn check(text: &str) -> Result<Vec<String>, FileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: AnnotationFile = serde_path_to_error::deserialize(de).map_err(|e| FileError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        let mut out = Vec::new();
        if file.version != FILE_VERSION {
            out.push(FileError::Version(file.version.clone()).to_string());
        }
        for (id, entry) in &file.episodes {
            for (index, seg) in entry.segments.iter().enumerate() {
                for v in validate_segment(seg, None, None) {
                    out.push(format!("episode {id:?} segment {index}: {v}"));
                }
                if index > 0 && entry.segments[index - 1].start > seg.start {
                    out.push(format!("episode {id:?} segment {index}: segments are not sorted by start"));
                }
            }
            let mut sorted: Vec<(usize, &AnnotationSegment)> = entry.segments.iter().enumerate().collect();
            sorted.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
            for w in sorted.windows(2) {
                if w[0].1.overlaps(w[1].1) {
                    out.push(format!("episode {id:?} segment {}: overlaps segment {}", w[1].0, w[0].0));
                }
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), FileError> {
        if self.version != FILE_VERSION {
            return Err(FileError::Version(self.version.clone()));
        }
        for (id, entry) in &self.episodes {
            entry::validate(id, entry)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Writes the canonical form atomically: temp file in the same directory,
    /// then rename.
    pub fn save(&self, path: &Path) -> Result<(), FileError> {
        let io = |source| FileError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        std::fs::write(&tmp, self.to_canonical_json()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    /// Canonical text: fixed key order, two-space indent, times with at
    /// least six fractional digits.
    pub fn to_canonical_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"annotator\": {},", json_str(&self.annotator));
        let _ = writeln!(out, "  \"dataset\": {},", json_str(&self.dataset));
        if self.episodes.is_empty() {
            out.push_str("  \"episodes\": {},\n");
        } else {
            out.push_str("  \"episodes\": {\n");
            let n = self.episodes.len();
            for (i, (id, entry)) in self.episodes.iter().enumerate() {
                let _ = write!(out, "    {}: ", json_str(id));
                write_entry(&mut out, entry, 4);
                out.push_str(if i + 1 < n { ",\n" } else { "\n" });
            }
            out.push_str("  },\n");
        }
        let _ = writeln!(out, "  \"version\": {}", json_str(&self.version));
        out.push_str("}\n");
        out
    }
}

mod entry {
    use super::*;

    pub(super) fn validate(id: &str, entry: &EpisodeEntry) -> Result<(), FileError> {
        for (index, seg) in entry.segments.iter().enumerate() {
            let v = validate_segment(seg, None, None);
            if let Some(first) = v.first() {
                return Err(FileError::Segment {
                    episode: id.to_string(),
                    index,
                    message: first.to_string(),
                });
            }
            if index > 0 && entry.segments[index - 1].start > seg.start {
                return Err(FileError::Segment {
                    episode: id.to_string(),
                    index,
                    message: "segments are not sorted by start".into(),
                });
            }
        }
        if let Some((a, b)) = first_overlap(&entry.segments) {
            return Err(FileError::Segment {
                episode: id.to_string(),
                index: b,
                message: format!("overlaps segment {a}"),
            });
        }
        Ok(())
    }
}

/// Canonical JSON for one episode entry, as exchanged with the UI.
pub fn entry_to_canonical_json(entry: &EpisodeEntry) -> String {
    let mut out = String::new();
    write_entry(&mut out, entry, 0);
    out.push('\n');
    out
}

/// Parses and validates one episode entry, reporting schema errors with their
/// field path.
pub fn parse_entry(id: &str, text: &str) -> Result<EpisodeEntry, FileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let entry: EpisodeEntry = serde_path_to_error::deserialize(de).map_err(|e| FileError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    entry::validate(id, &entry)?;
    Ok(entry)
}

fn write_entry(out: &mut String, entry: &EpisodeEntry, indent: usize) {
    let pad = " ".repeat(indent);
    out.push_str("{\n");
    if let Some(d) = &entry.description {
        let _ = writeln!(out, "{pad}  \"description\": {},", json_str(d));
    }
    if entry.segments.is_empty() {
        let _ = write!(out, "{pad}  \"segments\": []\n{pad}}}");
        return;
    }
    let _ = writeln!(out, "{pad}  \"segments\": [");
    let n = entry.segments.len();
    for (i, s) in entry.segments.iter().enumerate() {
        let _ = write!(
            out,
            "{pad}    {{\"end\": {}, \"label\": {}, \"start\": {}, \"success\": {}}}",
            format_seconds(s.end),
            json_str(&s.label),
            format_seconds(s.start),
            s.success
        );
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    let _ = write!(out, "{pad}  ]\n{pad}}}");
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Decimal seconds with six fractional digits, or more when six would not
/// read back as the same `f64`.
pub fn format_seconds(t: Seconds) -> String {
    for digits in 6..=17 {
        let s = format!("{t:.digits$}");
        if s.parse::<f64>().ok() == Some(t) {
            return s;
        }
    }
    // shortest exact representation, always has a fraction or exponent
    format!("{t:?}")
}
