//! Tool configuration file.
//!
//! The file is TOML. Unknown keys are rejected so typos in shortcut maps or
//! stream declarations surface at startup rather than as silently missing data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Seconds, UNLABELED};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Rlds,
    Video,
    Frames,
    Rosbag1,
    Rosbag2,
    Reassemble,
}

impl DatasetFormat {
    pub const ALL: [DatasetFormat; 6] = [
        DatasetFormat::Rlds,
        DatasetFormat::Video,
        DatasetFormat::Frames,
        DatasetFormat::Rosbag1,
        DatasetFormat::Rosbag2,
        DatasetFormat::Reassemble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetFormat::Rlds => "rlds",
            DatasetFormat::Video => "video",
            DatasetFormat::Frames => "frames",
            DatasetFormat::Rosbag1 => "rosbag1",
            DatasetFormat::Rosbag2 => "rosbag2",
            DatasetFormat::Reassemble => "reassemble",
        }
    }

    pub fn needs_fps(self) -> bool {
        matches!(self, DatasetFormat::Video | DatasetFormat::Frames)
    }
}

impl std::fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How camera frames are stored by the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageEncoding {
    Jpeg,
    Png,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDecl {
    pub name: String,
    /// Topic, feature key or dataset path, depending on the format.
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<ImageEncoding>,
    /// `[height, width, channels]` for raw frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 3]>,
    /// Per-frame timestamp dataset (HDF5 sources).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDecl {
    pub name: String,
    pub source: String,
    #[serde(default)]
    pub default_visible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<String>,
}

impl CameraDecl {
    pub fn new(name: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            encoding: None,
            shape: None,
            timestamps: None,
        }
    }
}

impl ChannelDecl {
    pub fn new(name: impl Into<String>, source: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            default_visible: true,
            unit: None,
            dims: None,
            dim_labels: None,
            timestamps: None,
        }
    }
}

/// Step-indexed dataset settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RldsSettings {
    /// Feature whose length is the step count of an episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_count_key: Option<String>,
    /// Per-step timestamp feature in seconds. Takes precedence over `step_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hdf5Settings {
    /// Root attribute holding the episode description.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_attr: Option<String>,
    /// Group holding per-sensor timestamp arrays, used when a stream does not
    /// name its own.
    #[serde(default = "default_timestamp_group")]
    pub timestamp_group: String,
}

fn default_timestamp_group() -> String {
    "timestamps".to_string()
}

impl Default for Hdf5Settings {
    fn default() -> Self {
        Self {
            description_attr: Some("description".into()),
            timestamp_group: default_timestamp_group(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolConfig {
    pub dataset_format: DatasetFormat,
    pub data_path: PathBuf,
    pub annotation_output_path: PathBuf,
    #[serde(default)]
    pub cameras: Vec<CameraDecl>,
    #[serde(default)]
    pub channels: Vec<ChannelDecl>,
    pub label_set: Vec<String>,
    #[serde(default = "default_shortcuts")]
    pub shortcuts: BTreeMap<String, String>,
    #[serde(default = "default_fast_step")]
    pub nav_fast_step: Seconds,
    #[serde(default = "default_slow_step")]
    pub nav_slow_step: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_fps: Option<f64>,
    pub annotator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rlds: Option<RldsSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hdf5: Option<Hdf5Settings>,
}

fn default_fast_step() -> Seconds {
    1.0
}

fn default_slow_step() -> Seconds {
    0.033
}

pub fn default_shortcuts() -> BTreeMap<String, String> {
    [
        ("toggle_segment", "s"),
        ("cancel_segment", "Escape"),
        ("play_pause", " "),
        ("fast_forward", "ArrowRight"),
        ("fast_backward", "ArrowLeft"),
        ("slow_forward", "d"),
        ("slow_backward", "a"),
        ("save", "Ctrl+s"),
    ]
    .into_iter()
    .map(|(a, k)| (a.to_string(), k.to_string()))
    .collect()
}

impl ToolConfig {
    /// Minimal valid configuration for `format` at `data_path`.
    pub fn new(format: DatasetFormat, data_path: impl Into<PathBuf>, label_set: Vec<String>) -> Self {
        Self {
            dataset_format: format,
            data_path: data_path.into(),
            annotation_output_path: PathBuf::from("annotations"),
            cameras: Vec::new(),
            channels: Vec::new(),
            label_set,
            shortcuts: default_shortcuts(),
            nav_fast_step: default_fast_step(),
            nav_slow_step: default_slow_step(),
            video_fps: format.needs_fps().then_some(30.0),
            annotator_id: "annotator".into(),
            rlds: None,
            hdf5: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ToolConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            if cfg.data_path.is_relative() {
                cfg.data_path = base.join(&cfg.data_path);
            }
            if cfg.annotation_output_path.is_relative() {
                cfg.annotation_output_path = base.join(&cfg.annotation_output_path);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.label_set.is_empty() {
            return invalid("label_set must not be empty".into());
        }
        let mut seen = std::collections::HashSet::new();
        for l in &self.label_set {
            if l.is_empty() || l == UNLABELED {
                return invalid(format!("label {l:?} is not allowed"));
            }
            if !seen.insert(l) {
                return invalid(format!("duplicate label {l:?}"));
            }
        }
        if !(self.nav_slow_step > 0.0 && self.nav_fast_step > self.nav_slow_step) {
            return invalid(format!(
                "need nav_fast_step > nav_slow_step > 0, got {} and {}",
                self.nav_fast_step, self.nav_slow_step
            ));
        }
        match (self.dataset_format.needs_fps(), self.video_fps) {
            (true, None) => return invalid(format!("video_fps is required for {}", self.dataset_format)),
            (true, Some(fps)) if !(fps > 0.0 && fps.is_finite()) => return invalid(format!("video_fps must be positive, got {fps}")),
            (false, Some(_)) => return invalid(format!("video_fps is only valid for video and frames, not {}", self.dataset_format)),
            _ => {}
        }
        let mut names = std::collections::HashSet::new();
        for n in self.cameras.iter().map(|c| &c.name).chain(self.channels.iter().map(|c| &c.name)) {
            if n.is_empty() || !names.insert(n) {
                return invalid(format!("stream name {n:?} is empty or duplicated"));
            }
        }
        if self.annotator_id.is_empty() {
            return invalid("annotator_id must not be empty".into());
        }
        Ok(())
    }

    /// Name recorded in annotation files.
    pub fn dataset_name(&self) -> String {
        self.data_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }

    /// File annotations for this dataset and annotator are written to.
    pub fn annotation_file(&self) -> PathBuf {
        self.annotation_output_path
            .join(format!("{}__{}.json", self.dataset_name(), self.annotator_id))
    }
}
