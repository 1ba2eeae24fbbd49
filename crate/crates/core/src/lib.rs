//! Core of the action segmentation workbench: the episode model, stream
//! synchronization, annotation sessions with their file format, and the
//! inter-annotator agreement metrics.
//!
//! This crate has no I/O dependencies beyond `std::fs` for the annotation and
//! config files, so it also builds for `wasm32-unknown-unknown`.

pub mod annotation;
pub mod config;
pub mod metrics;
pub mod model;
pub mod sync;

pub use annotation::{AnnotationFile, AnnotationSession, SegmentPatch, SessionError};
pub use config::{DatasetFormat, ToolConfig};
pub use model::{
    AnnotationSegment, CameraStream, Episode, EpisodeAnnotation, LabelTimeline, Seconds, SourceRef, TimeSeriesChannel,
    UNLABELED,
};
