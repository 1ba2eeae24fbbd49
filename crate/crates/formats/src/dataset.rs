//! The adapter contract, the format registry and the dataset handle.

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use seglab_core::config::{DatasetFormat, ToolConfig};
use seglab_core::model::{Episode, Seconds};
use seglab_core::sync::nearest_index;

use crate::frame::Frame;
use crate::io::IoStats;
use crate::{detect, media, reassemble, rlds, rosbag, FormatError, Result};

/// Where an episode lives. Only the adapter that produced a locator knows
/// how to resolve it.
#[derive(Debug, Clone, PartialEq)]
pub enum EpisodeLocator {
    File(PathBuf),
    Directory(PathBuf),
    /// One TFRecord frame; `offset` is the frame start within the shard.
    Record { shard: PathBuf, ordinal: usize, offset: u64, len: u64 },
    /// Per-camera media sources.
    Media(Vec<(String, PathBuf)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub id: String,
    pub locator: EpisodeLocator,
    /// Known without loading the episode.
    pub duration: Option<Seconds>,
}

/// What every format adapter implements.
pub trait DatasetBackend: Send + Sync {
    /// Lists episodes from index and metadata structures only.
    fn build_index(&self) -> Result<Vec<IndexEntry>>;

    fn load(&self, entry: &IndexEntry) -> Result<Episode>;

    /// Frame `index` of `camera`. `episode` is the value `load` returned.
    fn frame(&self, entry: &IndexEntry, episode: &Episode, camera: &str, index: usize) -> Result<Frame>;

    /// Non-fatal findings collected so far.
    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }
}

pub type Detector = fn(&Path) -> std::io::Result<bool>;
pub type Constructor = Arc<dyn Fn(&ToolConfig, Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> + Send + Sync>;

#[derive(Clone)]
pub struct Registration {
    pub format: DatasetFormat,
    pub detect: Detector,
    pub open: Constructor,
}

#[derive(Clone, Default)]
pub struct Registry {
    entries: Vec<Registration>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry with every built-in adapter.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(DatasetFormat::Rosbag1, detect::detect_rosbag1, Arc::new(rosbag::open_ros1));
        r.register(DatasetFormat::Rosbag2, detect::detect_rosbag2, Arc::new(rosbag::open_ros2));
        r.register(DatasetFormat::Rlds, detect::detect_rlds, Arc::new(rlds::open));
        r.register(DatasetFormat::Reassemble, detect::detect_reassemble, Arc::new(reassemble::open));
        r.register(DatasetFormat::Video, detect::detect_video, Arc::new(media::open_video));
        r.register(DatasetFormat::Frames, detect::detect_frames, Arc::new(media::open_frames));
        r
    }

    /// Adds or replaces the adapter for `format`.
    pub fn register(&mut self, format: DatasetFormat, detect: Detector, open: Constructor) {
        self.entries.retain(|e| e.format != format);
        self.entries.push(Registration { format, detect, open });
    }

    /// The single format whose detector accepts `path`; `None` when no
    /// detector or more than one does.
    pub fn detect(&self, path: &Path) -> std::io::Result<Option<DatasetFormat>> {
        std::fs::metadata(path)?;
        let mut hit = None;
        for e in &self.entries {
            if (e.detect)(path)? {
                if hit.is_some() {
                    return Ok(None);
                }
                hit = Some(e.format);
            }
        }
        Ok(hit)
    }

    fn constructor(&self, format: DatasetFormat) -> Option<&Constructor> {
        self.entries.iter().find(|e| e.format == format).map(|e| &e.open)
    }
}

pub fn detect_format(path: &Path) -> std::io::Result<Option<DatasetFormat>> {
    Registry::builtin().detect(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub id: String,
    pub duration: Option<Seconds>,
}

const EPISODE_CACHE: usize = 4;

/// An opened dataset: the episode index plus a small cache of loaded episodes.
pub struct Dataset {
    format: DatasetFormat,
    root: PathBuf,
    config: Arc<ToolConfig>,
    backend: Box<dyn DatasetBackend>,
    entries: Vec<IndexEntry>,
    positions: HashMap<String, usize>,
    durations: Mutex<HashMap<String, Seconds>>,
    cache: Mutex<VecDeque<(String, Arc<Episode>)>>,
    loading: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    stats: Arc<IoStats>,
}

impl std::fmt::Debug for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dataset")
            .field("format", &self.format)
            .field("root", &self.root)
            .field("episodes", &self.entries.len())
            .finish()
    }
}

impl Dataset {
    pub fn open(config: ToolConfig) -> Result<Self> {
        Self::open_with(&Registry::builtin(), config)
    }

    pub fn open_with(registry: &Registry, config: ToolConfig) -> Result<Self> {
        let root = config.data_path.clone();
        let found = registry.detect(&root).map_err(|e| FormatError::io(&root, e))?;
        if let Some(found) = found {
            if found != config.dataset_format {
                return Err(FormatError::FormatMismatch {
                    expected: config.dataset_format,
                    found,
                    path: root,
                });
            }
        }
        let open = registry
            .constructor(config.dataset_format)
            .ok_or(FormatError::NoAdapter(config.dataset_format))?;
        let stats = IoStats::new();
        let backend = open(&config, stats.clone())?;
        let entries = backend.build_index()?;
        let mut positions = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if positions.insert(e.id.clone(), i).is_some() {
                return Err(FormatError::Config(format!("episode id {:?} is not unique", e.id)));
            }
        }
        Ok(Self {
            format: config.dataset_format,
            root,
            config: Arc::new(config),
            backend,
            entries,
            positions,
            durations: Mutex::new(HashMap::new()),
            cache: Mutex::new(VecDeque::new()),
            loading: Mutex::new(HashMap::new()),
            stats,
        })
    }

    pub fn format(&self) -> DatasetFormat {
        self.format
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &ToolConfig {
        &self.config
    }

    pub fn index(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Episode ids with durations known so far.
    pub fn episodes(&self) -> Vec<EpisodeSummary> {
        let durations = self.durations.lock().unwrap();
        self.entries
            .iter()
            .map(|e| EpisodeSummary {
                id: e.id.clone(),
                duration: e.duration.or_else(|| durations.get(&e.id).copied()),
            })
            .collect()
    }

    pub fn bytes_read(&self) -> u64 {
        self.stats.bytes_read()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.backend.warnings()
    }

    fn entry(&self, id: &str) -> Result<&IndexEntry> {
        self.positions
            .get(id)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| FormatError::UnknownEpisode(id.to_string()))
    }

    fn cached(&self, id: &str) -> Option<Arc<Episode>> {
        let cache = self.cache.lock().unwrap();
        cache.iter().find(|(k, _)| k == id).map(|(_, e)| e.clone())
    }

    /// Loads (or returns the cached) episode. Loads of one id are serialized;
    /// distinct ids load concurrently.
    pub fn load_episode(&self, id: &str) -> Result<Arc<Episode>> {
        let entry = self.entry(id)?;
        if let Some(ep) = self.cached(id) {
            return Ok(ep);
        }
        let gate = self.loading.lock().unwrap().entry(id.to_string()).or_default().clone();
        let _guard = gate.lock().unwrap();
        if let Some(ep) = self.cached(id) {
            return Ok(ep);
        }
        let ep = Arc::new(self.backend.load(entry)?);
        self.durations.lock().unwrap().insert(id.to_string(), ep.duration);
        let mut cache = self.cache.lock().unwrap();
        cache.push_back((id.to_string(), ep.clone()));
        while cache.len() > EPISODE_CACHE {
            cache.pop_front();
        }
        Ok(ep)
    }

    pub fn frame(&self, id: &str, camera: &str, index: usize) -> Result<Frame> {
        let episode = self.load_episode(id)?;
        let cam = episode.camera(camera).ok_or_else(|| FormatError::UnknownStream(camera.to_string()))?;
        if index >= cam.frame_count() {
            return Err(FormatError::OutOfRange(format!(
                "frame {index} of {camera} (has {})",
                cam.frame_count()
            )));
        }
        self.backend.frame(self.entry(id)?, &episode, camera, index)
    }

    /// Frame nearest to `t`, which must lie in `[0, duration]`.
    pub fn frame_at(&self, id: &str, camera: &str, t: Seconds) -> Result<(usize, Frame)> {
        let episode = self.load_episode(id)?;
        let index = frame_index_at(&episode, camera, t)?;
        Ok((index, self.frame(id, camera, index)?))
    }
}

/// Index of the frame shown at `t`. Cameras shorter than the episode clamp
/// to their last frame.
pub fn frame_index_at(episode: &Episode, camera: &str, t: Seconds) -> Result<usize> {
    let cam = episode.camera(camera).ok_or_else(|| FormatError::UnknownStream(camera.to_string()))?;
    if !(0.0..=episode.duration).contains(&t) {
        return Err(FormatError::OutOfRange(format!(
            "t={t} is outside [0, {}]",
            episode.duration
        )));
    }
    nearest_index(&cam.frame_timestamps, t).map_err(|e| FormatError::OutOfRange(e.to_string()))
}
