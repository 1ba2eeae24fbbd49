//! ROS1 `.bag` files and ROS2 bag directories.
//!
//! One bag (or one ROS2 bag directory) is one episode.

pub mod decode;
pub mod ros1;
pub mod ros2;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use seglab_core::config::ToolConfig;
use seglab_core::model::{CameraStream, Episode, SourceRef, TimeSeriesChannel};
use thiserror::Error;

pub use decode::{decode_message, Decoded, DecodedImage, DecodedSample, MessageKind, Serialization};
pub use ros1::{parse_ros1_bag, parse_ros1_bytes, parse_ros1_reader};
pub use ros2::parse_ros2_bag;

use crate::dataset::{DatasetBackend, EpisodeLocator, IndexEntry};
use crate::detect::{files, has_rosbag1_magic, is_rosbag2_dir, subdirs};
use crate::frame::Frame;
use crate::io::IoStats;
use crate::{FormatError, Result};

#[derive(Debug, Error)]
pub enum BagError {
    #[error("not a ROS1 v2.0 bag (bad magic)")]
    BadMagic,
    #[error("unsupported chunk compression {0:?} (only \"none\" and \"lz4\" are readable)")]
    UnsupportedCompression(String),
    #[error("record at byte {offset} is truncated")]
    Truncated { offset: u64 },
    #[error("malformed record at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("message refers to unknown connection {0}")]
    UnknownConnection(u32),
    #[error("topic {topic:?} is recorded with two types, {first} and {second}")]
    TypeConflict { topic: String, first: String, second: String },
    #[error("{} is not a ROS2 bag directory (needs metadata.yaml and a .db3 file)", .0.display())]
    NotABagDirectory(PathBuf),
    #[error("{}: missing tables {missing:?}", path.display())]
    MissingTables { path: PathBuf, missing: Vec<String> },
    #[error("topic {topic:?} uses serialization {format:?}; only \"cdr\" is supported")]
    NotCdr { topic: String, format: String },
    #[error("sqlite {}: {message}", path.display())]
    Sqlite { path: PathBuf, message: String },
    #[error("read failed: {0}")]
    Read(String),
}

/// Where a message payload lives, for re-reading it later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageLocator {
    /// `offset` is into the decompressed chunk at `chunk_pos`, or into the
    /// file when the message is not chunked.
    Ros1 { chunk_pos: Option<u64>, offset: u64, len: u32 },
    Ros2 { file: usize, row: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawMessage {
    /// Receive (log) time in nanoseconds.
    pub receive_ns: i64,
    pub payload: Vec<u8>,
    pub locator: MessageLocator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTopicStream {
    pub topic: String,
    pub type_name: String,
    pub serialization: Serialization,
    /// Ordered by receive time.
    pub messages: Vec<RawMessage>,
}

/// Output of [`bag_to_episode`].
#[derive(Debug, Clone)]
pub struct BagEpisode {
    pub episode: Episode,
    pub warnings: Vec<String>,
    /// Per camera: message locators in frame order, plus the topic type.
    pub frames: HashMap<String, CameraFrames>,
}

#[derive(Debug, Clone)]
pub struct CameraFrames {
    pub type_name: String,
    pub serialization: Serialization,
    pub locators: Vec<MessageLocator>,
}

enum Target {
    Camera { name: String },
    Channel { name: String, unit: String, dim_labels: Option<Vec<String>> },
}

fn auto_name(topic: &str) -> String {
    let t = topic.trim_start_matches('/');
    if t.is_empty() {
        topic.to_string()
    } else {
        t.to_string()
    }
}

fn targets(streams: &[RawTopicStream], config: &ToolConfig) -> Vec<(String, Target)> {
    if config.cameras.is_empty() && config.channels.is_empty() {
        return streams
            .iter()
            .filter_map(|s| {
                let kind = MessageKind::from_type_name(&s.type_name)?;
                let name = auto_name(&s.topic);
                Some((
                    s.topic.clone(),
                    if kind.is_image() {
                        Target::Camera { name }
                    } else {
                        Target::Channel {
                            name,
                            unit: String::new(),
                            dim_labels: None,
                        }
                    },
                ))
            })
            .collect();
    }
    let cams = config.cameras.iter().map(|c| (c.source.clone(), Target::Camera { name: c.name.clone() }));
    let chans = config.channels.iter().map(|c| {
        (
            c.source.clone(),
            Target::Channel {
                name: c.name.clone(),
                unit: c.unit.clone().unwrap_or_default(),
                dim_labels: c.dim_labels.clone(),
            },
        )
    });
    cams.chain(chans).collect()
}

fn seconds(ns: i64, epoch: i64) -> f64 {
    (ns - epoch) as f64 / 1e9
}

/// Maps decoded topics onto cameras and channels and shifts all times so the
/// earliest mapped sample is at zero.
pub fn bag_to_episode(id: &str, streams: &[RawTopicStream], config: &ToolConfig) -> Result<BagEpisode> {
    let by_topic: BTreeMap<&str, &RawTopicStream> = streams.iter().map(|s| (s.topic.as_str(), s)).collect();
    let targets = targets(streams, config);
    let mut warnings = Vec::new();

    let present: Vec<_> = targets.iter().filter(|(t, _)| by_topic.contains_key(t.as_str())).collect();
    if present.is_empty() {
        let wanted: Vec<_> = targets.iter().map(|(t, _)| t.as_str()).collect();
        let available: Vec<_> = streams.iter().map(|s| format!("{} ({})", s.topic, s.type_name)).collect();
        return Err(FormatError::Config(format!(
            "none of the configured topics {wanted:?} are in bag {id:?}; available topics: {available:?}"
        )));
    }
    for (topic, _) in &targets {
        if !by_topic.contains_key(topic.as_str()) {
            warnings.push(format!("configured topic {topic} is not in bag {id}"));
        }
    }
    for s in streams {
        if !targets.iter().any(|(t, _)| t == &s.topic) {
            warnings.push(format!("topic {} ({}) is not mapped and was ignored", s.topic, s.type_name));
        }
    }

    // decode everything first: the epoch depends on all mapped topics
    enum Decoded2 {
        Camera(Vec<(i64, MessageLocator)>),
        Channel(Vec<(i64, DecodedSample)>),
    }
    let mut decoded = Vec::new();
    for (topic, target) in &present {
        let s = by_topic[topic.as_str()];
        let kind = MessageKind::from_type_name(&s.type_name)
            .ok_or_else(|| FormatError::Unsupported(format!("topic {topic}: unsupported message type {}", s.type_name)))?;
        let ctx = |k: usize| format!("{id} topic {topic} message {k}");
        match target {
            Target::Camera { name } => {
                if !kind.is_image() {
                    return Err(FormatError::Config(format!("camera {name:?} maps to non-image topic {topic} ({})", s.type_name)));
                }
                let mut frames = Vec::with_capacity(s.messages.len());
                for (k, m) in s.messages.iter().enumerate() {
                    let stamp = match decode_message(&m.payload, &s.type_name, s.serialization).map_err(|e| FormatError::decode(ctx(k), e))? {
                        Decoded::Image(img) => img.stamp_ns,
                        Decoded::Sample(smp) => smp.stamp_ns,
                    };
                    frames.push((stamp.unwrap_or(m.receive_ns), m.locator));
                }
                frames.sort_by_key(|f| f.0);
                decoded.push(Decoded2::Camera(frames));
            }
            Target::Channel { name, .. } => {
                if kind.is_image() {
                    return Err(FormatError::Config(format!("channel {name:?} maps to image topic {topic}")));
                }
                let mut samples = Vec::with_capacity(s.messages.len());
                for (k, m) in s.messages.iter().enumerate() {
                    match decode_message(&m.payload, &s.type_name, s.serialization).map_err(|e| FormatError::decode(ctx(k), e))? {
                        Decoded::Sample(smp) => samples.push((smp.stamp_ns.unwrap_or(m.receive_ns), smp)),
                        Decoded::Image(_) => unreachable!("kind checked above"),
                    }
                }
                samples.sort_by_key(|f| f.0);
                decoded.push(Decoded2::Channel(samples));
            }
        }
    }

    let epoch = decoded
        .iter()
        .filter_map(|d| match d {
            Decoded2::Camera(f) => f.first().map(|x| x.0),
            Decoded2::Channel(s) => s.first().map(|x| x.0),
        })
        .min()
        .unwrap_or(0);

    let mut cameras = Vec::new();
    let mut channels = Vec::new();
    let mut frames = HashMap::new();
    for ((topic, target), d) in present.iter().zip(decoded) {
        let s = by_topic[topic.as_str()];
        match (target, d) {
            (Target::Camera { name }, Decoded2::Camera(f)) => {
                let ts = f.iter().map(|x| seconds(x.0, epoch)).collect();
                cameras.push(CameraStream::new(name.clone(), ts, SourceRef(topic.clone()))?);
                frames.insert(
                    name.clone(),
                    CameraFrames {
                        type_name: s.type_name.clone(),
                        serialization: s.serialization,
                        locators: f.into_iter().map(|x| x.1).collect(),
                    },
                );
            }
            (Target::Channel { name, unit, dim_labels }, Decoded2::Channel(samples)) => {
                let ts: Vec<f64> = samples.iter().map(|x| seconds(x.0, epoch)).collect();
                let sections = match samples.first() {
                    Some((_, first)) if !first.sections.is_empty() => first
                        .sections
                        .iter()
                        .map(|sec| (format!("{name}.{}", sec.suffix), Some(sec.suffix)))
                        .collect(),
                    _ => vec![(name.clone(), None)],
                };
                for (channel_name, suffix) in sections {
                    let slice = |smp: &DecodedSample| -> (Vec<f64>, Vec<String>) {
                        match suffix.and_then(|sfx| smp.sections.iter().find(|x| x.suffix == sfx)) {
                            Some(sec) => (
                                smp.vector[sec.start..sec.start + sec.len].to_vec(),
                                smp.dim_labels[sec.start..sec.start + sec.len].to_vec(),
                            ),
                            None if suffix.is_some() => (Vec::new(), Vec::new()),
                            None => (smp.vector.clone(), smp.dim_labels.clone()),
                        }
                    };
                    let Some((_, first)) = samples.first() else {
                        warnings.push(format!("topic {topic} has no messages; channel {channel_name} omitted"));
                        continue;
                    };
                    let (v0, mut labels) = slice(first);
                    let dims = v0.len();
                    if dims == 0 {
                        warnings.push(format!("channel {channel_name} from {topic} is empty and was omitted"));
                        continue;
                    }
                    if suffix.is_none() {
                        if let Some(l) = dim_labels {
                            if l.len() != dims {
                                return Err(FormatError::Config(format!(
                                    "channel {channel_name}: {} dim_labels for {dims} values",
                                    l.len()
                                )));
                            }
                            labels = l.clone();
                        }
                    }
                    let mut values = Vec::with_capacity(dims * samples.len());
                    for (k, (_, smp)) in samples.iter().enumerate() {
                        let (v, _) = slice(smp);
                        if v.len() != dims {
                            return Err(FormatError::decode(
                                format!("{id} topic {topic} message {k}"),
                                format!("{} values for channel {channel_name}, expected {dims}", v.len()),
                            ));
                        }
                        values.extend(v);
                    }
                    channels.push(TimeSeriesChannel::new(channel_name, unit.clone(), labels, ts.clone(), values)?);
                }
            }
            _ => unreachable!("decoded in target order"),
        }
    }
    let episode = Episode::new(id, cameras, channels, None)?;
    Ok(BagEpisode { episode, warnings, frames })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BagKind {
    Ros1,
    Ros2,
}

struct BagBackend {
    kind: BagKind,
    config: ToolConfig,
    stats: Arc<IoStats>,
    warnings: Mutex<Vec<String>>,
    frames: Mutex<HashMap<String, Arc<HashMap<String, CameraFrames>>>>,
    /// Last decompressed ROS1 chunk: (file, chunk_pos, bytes).
    chunk: Mutex<Option<(PathBuf, u64, Arc<Vec<u8>>)>>,
}

pub fn open_ros1(config: &ToolConfig, stats: Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> {
    Ok(Box::new(BagBackend::new(BagKind::Ros1, config, stats)))
}

pub fn open_ros2(config: &ToolConfig, stats: Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> {
    Ok(Box::new(BagBackend::new(BagKind::Ros2, config, stats)))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl BagBackend {
    fn new(kind: BagKind, config: &ToolConfig, stats: Arc<IoStats>) -> Self {
        Self {
            kind,
            config: config.clone(),
            stats,
            warnings: Mutex::new(Vec::new()),
            frames: Mutex::new(HashMap::new()),
            chunk: Mutex::new(None),
        }
    }

    fn path(entry: &IndexEntry) -> &Path {
        match &entry.locator {
            EpisodeLocator::File(p) | EpisodeLocator::Directory(p) => p,
            other => panic!("bag adapter given foreign locator {other:?}"),
        }
    }

    fn parse(&self, path: &Path) -> Result<Vec<RawTopicStream>> {
        let streams = match self.kind {
            BagKind::Ros1 => {
                let f = std::fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
                let counted = crate::io::CountingReader::new(f, self.stats.clone());
                parse_ros1_reader(std::io::BufReader::new(counted))?
            }
            BagKind::Ros2 => {
                let s = parse_ros2_bag(path)?;
                let bytes: usize = s.iter().flat_map(|t| &t.messages).map(|m| m.payload.len()).sum();
                self.stats.add(bytes as u64);
                s
            }
        };
        Ok(streams)
    }

    fn read_payload(&self, path: &Path, loc: MessageLocator) -> Result<Vec<u8>> {
        match loc {
            MessageLocator::Ros2 { file, row } => {
                let data = ros2::read_row(path, file, row)?;
                self.stats.add(data.len() as u64);
                Ok(data)
            }
            MessageLocator::Ros1 { chunk_pos, offset, len } => {
                let mut f = std::fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
                let Some(chunk_pos) = chunk_pos else {
                    self.stats.add(len as u64);
                    return Ok(ros1::read_plain(&mut f, offset, len)?);
                };
                let mut cache = self.chunk.lock().unwrap();
                let bytes = match &*cache {
                    Some((p, pos, bytes)) if p == path && *pos == chunk_pos => bytes.clone(),
                    _ => {
                        let mut counted = crate::io::CountingReader::new(f, self.stats.clone());
                        let bytes = Arc::new(ros1::read_chunk(&mut counted, chunk_pos)?);
                        *cache = Some((path.to_path_buf(), chunk_pos, bytes.clone()));
                        bytes
                    }
                };
                let (start, end) = (offset as usize, offset as usize + len as usize);
                bytes
                    .get(start..end)
                    .map(|s| s.to_vec())
                    .ok_or_else(|| FormatError::decode(path.display().to_string(), format!("message at chunk {chunk_pos}+{offset} out of bounds")))
            }
        }
    }
}

impl DatasetBackend for BagBackend {
    fn build_index(&self) -> Result<Vec<IndexEntry>> {
        let root = &self.config.data_path;
        let io = |e| FormatError::io(root, e);
        let mut out = Vec::new();
        match self.kind {
            BagKind::Ros1 if root.is_file() => out.push(IndexEntry {
                id: stem(root),
                locator: EpisodeLocator::File(root.clone()),
                duration: None,
            }),
            BagKind::Ros1 => {
                for f in files(root).map_err(io)? {
                    if has_rosbag1_magic(&f).map_err(io)? {
                        out.push(IndexEntry {
                            id: stem(&f),
                            locator: EpisodeLocator::File(f),
                            duration: None,
                        });
                    }
                }
            }
            BagKind::Ros2 if is_rosbag2_dir(root).map_err(io)? => out.push(IndexEntry {
                id: root.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                locator: EpisodeLocator::Directory(root.clone()),
                duration: None,
            }),
            BagKind::Ros2 => {
                for d in subdirs(root).map_err(io)? {
                    if is_rosbag2_dir(&d).map_err(io)? {
                        out.push(IndexEntry {
                            id: d.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                            locator: EpisodeLocator::Directory(d),
                            duration: None,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    fn load(&self, entry: &IndexEntry) -> Result<Episode> {
        let path = Self::path(entry);
        let streams = self.parse(path)?;
        let bag = bag_to_episode(&entry.id, &streams, &self.config)?;
        self.warnings.lock().unwrap().extend(bag.warnings);
        self.frames.lock().unwrap().insert(entry.id.clone(), Arc::new(bag.frames));
        Ok(bag.episode)
    }

    fn frame(&self, entry: &IndexEntry, _episode: &Episode, camera: &str, index: usize) -> Result<Frame> {
        let known = self.frames.lock().unwrap().get(&entry.id).cloned();
        let frames = match known {
            Some(f) => f,
            None => {
                self.load(entry)?;
                self.frames.lock().unwrap()[&entry.id].clone()
            }
        };
        let cam = frames.get(camera).ok_or_else(|| FormatError::UnknownStream(camera.to_string()))?;
        let loc = *cam
            .locators
            .get(index)
            .ok_or_else(|| FormatError::OutOfRange(format!("frame {index} of {camera}")))?;
        let path = Self::path(entry);
        let payload = self.read_payload(path, loc)?;
        match decode_message(&payload, &cam.type_name, cam.serialization)
            .map_err(|e| FormatError::decode(format!("{} camera {camera} frame {index}", entry.id), e))?
        {
            Decoded::Image(img) => Ok(img.frame),
            Decoded::Sample(_) => Err(FormatError::Unsupported(format!("{camera} is not an image topic"))),
        }
    }

    fn warnings(&self) -> Vec<String> {
        self.warnings.lock().unwrap().clone()
    }
}
