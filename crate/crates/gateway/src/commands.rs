//! The operator commands behind the `seglab` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use seglab_core::annotation::{AnnotationFile, FileError};
use seglab_core::config::{ConfigError, ToolConfig};
use seglab_core::metrics::{compare_files, merge_files, AgreementReport, MetricOptions, MetricsError};
use seglab_core::model::Seconds;
use seglab_formats::{Dataset, FormatError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Episodes, streams, sample counts and durations of a dataset, or of one
/// episode of it.
pub fn inspect(config: ToolConfig, episode: Option<&str>) -> Result<String, CommandError> {
    let ds = Dataset::open(config)?;
    let mut out = String::new();
    let _ = writeln!(out, "{} dataset at {}", ds.format(), ds.root().display());
    let index = ds.episodes();
    let _ = writeln!(out, "{} episode{}", index.len(), if index.len() == 1 { "" } else { "s" });
    let ids: Vec<String> = match episode {
        Some(id) => vec![ds.load_episode(id)?.id.clone()],
        None => index.into_iter().map(|e| e.id).collect(),
    };
    for id in ids {
        let ep = ds.load_episode(&id)?;
        let _ = writeln!(out, "\nepisode {id}  duration {:.3} s", ep.duration);
        if let Some(d) = &ep.description {
            let _ = writeln!(out, "  description: {d}");
        }
        for c in &ep.cameras {
            let _ = writeln!(out, "  camera  {:<32} {:>8} frames", c.name, c.frame_count());
        }
        for c in &ep.channels {
            let unit = if c.unit.is_empty() { String::new() } else { format!(" [{}]", c.unit) };
            let _ = writeln!(out, "  channel {:<32} {:>8} samples  {} dims{unit}  ({})", c.name, c.len(), c.dims(), c.dim_labels.join(", "));
        }
    }
    for w in ds.warnings() {
        let _ = writeln!(out, "warning: {w}");
    }
    Ok(out)
}

/// Episode durations from a dataset, for metrics over the full episode span.
pub fn dataset_durations(config: ToolConfig, ids: impl IntoIterator<Item = String>) -> Result<BTreeMap<String, Seconds>, CommandError> {
    let ds = Dataset::open(config)?;
    let mut out = BTreeMap::new();
    for id in ids {
        let ep = ds.load_episode(&id)?;
        out.insert(id, ep.duration);
    }
    Ok(out)
}

pub fn metrics(a: &Path, b: &Path, include_outcome: bool, durations: Option<&BTreeMap<String, Seconds>>) -> Result<AgreementReport, CommandError> {
    let fa = AnnotationFile::load(a)?;
    let fb = AnnotationFile::load(b)?;
    Ok(compare_files(&fa, &fb, durations, MetricOptions { include_outcome })?)
}

pub fn merge_gt(a: &Path, b: &Path, out: &Path) -> Result<AnnotationFile, CommandError> {
    let merged = merge_files(&AnnotationFile::load(a)?, &AnnotationFile::load(b)?)?;
    merged.save(out)?;
    Ok(merged)
}

/// Every problem in an annotation file; empty when it is valid.
pub fn validate(path: &Path) -> Result<Vec<String>, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match AnnotationFile::check(&text) {
        Ok(problems) => Ok(problems),
        Err(e @ FileError::Schema { .. }) => Ok(vec![e.to_string()]),
        Err(e) => Err(e),
    }
}
