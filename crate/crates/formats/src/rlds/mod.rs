//! RLDS datasets in the TFDS on-disk layout: `dataset_info.json` next to
//! `*.tfrecord-NNNNN-of-MMMMM` shards, one serialized `Example` per episode
//! with per-step features flattened across steps.
//!
//! Which features become cameras and channels comes from the tool config,
//! not from the TFDS feature schema.

pub mod example;
pub mod tfrecord;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use seglab_core::config::{ImageEncoding, ToolConfig};
use seglab_core::model::{CameraStream, Episode, SourceRef, TimeSeriesChannel};

pub use example::{decode_example, FeatureList, FeatureMap};
pub use tfrecord::{masked_crc32c, read_tfrecord_stream, TfRecordError, TfRecordReader};

use crate::dataset::{DatasetBackend, EpisodeLocator, IndexEntry};
use crate::detect::files;
use crate::frame::{sniff, Frame};
use crate::io::{CountingReader, IoStats};
use crate::{FormatError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CameraMapping {
    pub name: String,
    pub key: String,
    pub encoding: Option<ImageEncoding>,
    /// `[height, width, channels]`, required for raw frames.
    pub shape: Option<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMapping {
    pub name: String,
    pub key: String,
    pub dims: Option<usize>,
    pub unit: String,
    pub dim_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RldsMapping {
    pub step_count_key: Option<String>,
    pub timestamp_key: Option<String>,
    pub step_rate: Option<f64>,
    pub description_key: Option<String>,
    pub cameras: Vec<CameraMapping>,
    pub channels: Vec<ChannelMapping>,
}

impl RldsMapping {
    pub fn from_config(config: &ToolConfig) -> Self {
        let rlds = config.rlds.clone().unwrap_or_default();
        Self {
            step_count_key: rlds.step_count_key,
            timestamp_key: rlds.timestamp_key,
            step_rate: rlds.step_rate,
            description_key: rlds.description_key,
            cameras: config
                .cameras
                .iter()
                .map(|c| CameraMapping {
                    name: c.name.clone(),
                    key: c.source.clone(),
                    encoding: c.encoding,
                    shape: c.shape,
                })
                .collect(),
            channels: config
                .channels
                .iter()
                .map(|c| ChannelMapping {
                    name: c.name.clone(),
                    key: c.source.clone(),
                    dims: c.dims,
                    unit: c.unit.clone().unwrap_or_default(),
                    dim_labels: c.dim_labels.clone(),
                })
                .collect(),
        }
    }
}

fn feature<'a>(features: &'a FeatureMap, key: &str) -> Result<&'a FeatureList> {
    features.get(key).ok_or_else(|| {
        FormatError::Config(format!(
            "feature {key:?} not found; available keys: {:?}",
            features.keys().collect::<Vec<_>>()
        ))
    })
}

fn step_count(features: &FeatureMap, m: &RldsMapping) -> Result<usize> {
    if let Some(k) = &m.timestamp_key {
        return Ok(feature(features, k)?.len());
    }
    if let Some(k) = &m.step_count_key {
        return Ok(feature(features, k)?.len());
    }
    if let Some(c) = m.cameras.first() {
        return Ok(feature(features, &c.key)?.len());
    }
    if let Some((c, d)) = m.channels.iter().find_map(|c| c.dims.map(|d| (c, d))) {
        return Ok(feature(features, &c.key)?.len() / d.max(1));
    }
    // RLDS episodes carry one is_first flag per step
    if let Some((_, l)) = features.iter().find(|(k, _)| k.rsplit('/').next() == Some("is_first")) {
        return Ok(l.len());
    }
    if let Some(FeatureList::Bytes(v)) = features.values().find(|l| matches!(l, FeatureList::Bytes(v) if v.first().is_some_and(|b| sniff(b).is_some()))) {
        return Ok(v.len());
    }
    Err(FormatError::Config(
        "cannot tell the step count: set rlds.step_count_key or rlds.timestamp_key, map a camera, or give a channel dims".into(),
    ))
}

/// Without declared streams, every image-bytes feature with one entry per
/// step becomes a camera and every numeric feature a channel.
fn auto_mapping(features: &FeatureMap, m: &RldsMapping, steps: usize) -> RldsMapping {
    let mut out = m.clone();
    for (key, list) in features {
        if Some(key) == m.timestamp_key.as_ref() || Some(key) == m.description_key.as_ref() {
            continue;
        }
        match list {
            FeatureList::Bytes(v) if v.len() == steps && steps > 0 && sniff(&v[0]).is_some() => out.cameras.push(CameraMapping {
                name: key.clone(),
                key: key.clone(),
                encoding: None,
                shape: None,
            }),
            FeatureList::Floats(_) | FeatureList::Ints(_) if steps > 0 && !list.is_empty() && list.len() % steps == 0 => {
                out.channels.push(ChannelMapping {
                    name: key.clone(),
                    key: key.clone(),
                    dims: None,
                    unit: String::new(),
                    dim_labels: None,
                })
            }
            _ => {}
        }
    }
    out
}

/// Builds one episode from a decoded Example. All cameras and channels share
/// one timestamp array.
pub fn rlds_episode(id: &str, features: &FeatureMap, mapping: &RldsMapping) -> Result<Episode> {
    let steps = step_count(features, mapping)?;
    let auto;
    let m = if mapping.cameras.is_empty() && mapping.channels.is_empty() {
        auto = auto_mapping(features, mapping, steps);
        &auto
    } else {
        mapping
    };
    let mismatch = |key: &str, n: usize, expected: String| {
        FormatError::decode(
            format!("episode {id}"),
            format!("step-count mismatch: feature {key:?} has {n} values, expected {expected}"),
        )
    };

    let timestamps: Vec<f64> = match &m.timestamp_key {
        Some(k) => {
            let v = feature(features, k)?
                .to_f64()
                .ok_or_else(|| FormatError::Config(format!("timestamp feature {k:?} is not numeric")))?;
            let t0 = v.first().copied().unwrap_or(0.0);
            v.iter().map(|t| t - t0).collect()
        }
        None => {
            let rate = m
                .step_rate
                .ok_or_else(|| FormatError::Config("rlds.step_rate is required when no timestamp_key is set".into()))?;
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(FormatError::Config(format!("rlds.step_rate must be positive, got {rate}")));
            }
            (0..steps).map(|k| k as f64 / rate).collect()
        }
    };

    let mut channels = Vec::new();
    for c in &m.channels {
        let list = feature(features, &c.key)?;
        let values = list
            .to_f64()
            .ok_or_else(|| FormatError::Config(format!("channel {:?}: feature {:?} holds bytes, not numbers", c.name, c.key)))?;
        let dims = match c.dims {
            Some(d) if d > 0 && values.len() == d * steps => d,
            Some(d) => return Err(mismatch(&c.key, values.len(), format!("{steps} steps x {d} dims"))),
            None if steps > 0 && !values.is_empty() && values.len() % steps == 0 => values.len() / steps,
            None => return Err(mismatch(&c.key, values.len(), format!("a multiple of {steps} steps"))),
        };
        let labels = match &c.dim_labels {
            Some(l) if l.len() == dims => l.clone(),
            Some(l) => {
                return Err(FormatError::Config(format!(
                    "channel {:?}: {} dim_labels for {dims} dims",
                    c.name,
                    l.len()
                )))
            }
            None => (0..dims).map(|i| i.to_string()).collect(),
        };
        channels.push(TimeSeriesChannel::new(c.name.clone(), c.unit.clone(), labels, timestamps.clone(), values)?);
    }

    let mut cameras = Vec::new();
    for c in &m.cameras {
        let FeatureList::Bytes(frames) = feature(features, &c.key)? else {
            return Err(FormatError::Config(format!("camera {:?}: feature {:?} is not a bytes list", c.name, c.key)));
        };
        if frames.len() != steps {
            return Err(mismatch(&c.key, frames.len(), format!("{steps} frames")));
        }
        match c.encoding {
            Some(ImageEncoding::Raw) => {
                let [h, w, ch] = c
                    .shape
                    .ok_or_else(|| FormatError::Config(format!("camera {:?}: raw frames need a shape", c.name)))?;
                if let Some((k, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != h * w * ch) {
                    return Err(FormatError::decode(
                        format!("episode {id} camera {} frame {k}", c.name),
                        format!("{} bytes for a {h}x{w}x{ch} raw frame", f.len()),
                    ));
                }
            }
            Some(_) => {}
            None => {
                if let Some(f) = frames.first() {
                    sniff(f).ok_or_else(|| {
                        FormatError::Unsupported(format!(
                            "camera {:?}: unknown image encoding in feature {:?}; declare encoding = \"raw\" with a shape",
                            c.name, c.key
                        ))
                    })?;
                }
            }
        }
        cameras.push(CameraStream::new(c.name.clone(), timestamps.clone(), SourceRef(c.key.clone()))?);
    }

    let description = match &m.description_key {
        Some(k) => match feature(features, k)? {
            FeatureList::Bytes(v) => v.first().map(|b| String::from_utf8_lossy(b).into_owned()),
            _ => return Err(FormatError::Config(format!("description feature {k:?} is not a bytes list"))),
        },
        None => None,
    };
    Ok(Episode::new(id, cameras, channels, description)?)
}

/// Decodes frame `index` of a mapped camera.
pub fn rlds_frame(features: &FeatureMap, camera: &CameraMapping, index: usize) -> Result<Frame> {
    let FeatureList::Bytes(frames) = feature(features, &camera.key)? else {
        return Err(FormatError::Config(format!("feature {:?} is not a bytes list", camera.key)));
    };
    let bytes = frames
        .get(index)
        .ok_or_else(|| FormatError::OutOfRange(format!("frame {index} of {}", camera.name)))?
        .clone();
    match (camera.encoding, camera.shape) {
        (Some(ImageEncoding::Raw), Some([h, w, c])) => Frame::raw(w as u32, h as u32, c as u8, bytes),
        (Some(ImageEncoding::Jpeg), _) => Ok(Frame {
            kind: crate::frame::FrameKind::Jpeg,
            bytes,
        }),
        (Some(ImageEncoding::Png), _) => Ok(Frame {
            kind: crate::frame::FrameKind::Png,
            bytes,
        }),
        _ => Frame::encoded(bytes),
    }
}

fn shard_total(name: &str) -> Option<(String, usize)> {
    let (prefix, total) = name.rsplit_once("-of-")?;
    let (prefix, _) = prefix.rsplit_once('-')?;
    Some((prefix.to_string(), total.parse().ok()?))
}

/// One locator per record, by shard name then ordinal. Reads frame headers only.
pub fn build_episode_index(dir: &Path, stats: &Arc<IoStats>) -> Result<(Vec<IndexEntry>, Vec<String>)> {
    let io = |e| FormatError::io(dir, e);
    let listing = files(dir).map_err(io)?;
    if !listing.iter().any(|p| p.file_name().is_some_and(|n| n == "dataset_info.json")) {
        return Err(FormatError::Config(format!("{} is not an RLDS dataset: dataset_info.json is missing", dir.display())));
    }
    let shards: Vec<PathBuf> = listing
        .into_iter()
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().contains(".tfrecord")))
        .collect();

    let mut warnings = Vec::new();
    let mut groups: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in &shards {
        let name = s.file_name().unwrap().to_string_lossy().into_owned();
        if let Some((prefix, total)) = shard_total(&name) {
            let g = groups.entry(prefix).or_insert((0, total));
            g.0 += 1;
        }
    }
    for (prefix, (found, total)) in groups {
        if found != total {
            warnings.push(format!("{prefix}: found {found} shards, names say {total}"));
        }
    }

    let mut entries = Vec::new();
    for shard in shards {
        let name = shard.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let file = File::open(&shard).map_err(|e| FormatError::io(&shard, e))?;
        let size = file.metadata().map_err(|e| FormatError::io(&shard, e))?.len();
        // unbuffered: a read-ahead buffer would pull in the payloads being skipped
        let mut r = CountingReader::new(file, stats.clone());
        let headers = tfrecord::scan_headers(&mut r).map_err(|e| FormatError::decode(format!("shard {name}"), e))?;
        for (ordinal, (offset, len)) in headers.into_iter().enumerate() {
            if offset.saturating_add(16).saturating_add(len) > size {
                warnings.push(format!("shard {name}: record {ordinal} at byte {offset} is truncated"));
            }
            entries.push(IndexEntry {
                id: format!("{name}_{ordinal}"),
                locator: EpisodeLocator::Record {
                    shard: shard.clone(),
                    ordinal,
                    offset,
                    len,
                },
                duration: None,
            });
        }
    }
    Ok((entries, warnings))
}

struct RldsBackend {
    root: PathBuf,
    mapping: RldsMapping,
    stats: Arc<IoStats>,
    warnings: Mutex<Vec<String>>,
    last: Mutex<Option<(String, Arc<FeatureMap>)>>,
}

pub fn open(config: &ToolConfig, stats: Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> {
    Ok(Box::new(RldsBackend {
        root: config.data_path.clone(),
        mapping: RldsMapping::from_config(config),
        stats,
        warnings: Mutex::new(Vec::new()),
        last: Mutex::new(None),
    }))
}

impl RldsBackend {
    fn features(&self, entry: &IndexEntry) -> Result<Arc<FeatureMap>> {
        if let Some((id, f)) = &*self.last.lock().unwrap() {
            if id == &entry.id {
                return Ok(f.clone());
            }
        }
        let EpisodeLocator::Record { shard, ordinal, offset, .. } = &entry.locator else {
            panic!("rlds adapter given foreign locator {:?}", entry.locator);
        };
        let name = shard.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let file = File::open(shard).map_err(|e| FormatError::io(shard, e))?;
        let mut r = BufReader::new(CountingReader::new(file, self.stats.clone()));
        let payload = tfrecord::read_record_at(&mut r, *offset, *ordinal)
            .map_err(|e| FormatError::decode(format!("shard {name} record {ordinal} at byte {offset}"), e))?;
        let features = Arc::new(
            decode_example(&payload).map_err(|e| FormatError::decode(format!("shard {name} record {ordinal} at byte {offset}"), e))?,
        );
        *self.last.lock().unwrap() = Some((entry.id.clone(), features.clone()));
        Ok(features)
    }
}

impl DatasetBackend for RldsBackend {
    fn build_index(&self) -> Result<Vec<IndexEntry>> {
        let (entries, warnings) = build_episode_index(&self.root, &self.stats)?;
        self.warnings.lock().unwrap().extend(warnings);
        Ok(entries)
    }

    fn load(&self, entry: &IndexEntry) -> Result<Episode> {
        let features = self.features(entry)?;
        rlds_episode(&entry.id, &features, &self.mapping)
    }

    fn frame(&self, entry: &IndexEntry, episode: &Episode, camera: &str, index: usize) -> Result<Frame> {
        let features = self.features(entry)?;
        let cam = episode.camera(camera).ok_or_else(|| FormatError::UnknownStream(camera.to_string()))?;
        let mapping = self
            .mapping
            .cameras
            .iter()
            .find(|c| c.name == camera)
            .cloned()
            .unwrap_or(CameraMapping {
                name: camera.to_string(),
                key: cam.source_ref.0.clone(),
                encoding: None,
                shape: None,
            });
        rlds_frame(&features, &mapping, index)
    }

    fn warnings(&self) -> Vec<String> {
        self.warnings.lock().unwrap().clone()
    }
}
