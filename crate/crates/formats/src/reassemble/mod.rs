//! HDF5 demonstrations in the REASSEMBLE style: one file per episode, sensor
//! datasets in groups, and a per-sensor timestamp array for every stream.
//!
//! By default a stream at `group/name` takes its timestamps from
//! `timestamps/name`. Float timestamps are seconds; integer ones nanoseconds.

pub mod prefetch;

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use hdf5::types::{TypeDescriptor, VarLenArray, VarLenAscii, VarLenUnicode};
use ndarray::{s, Ix4};
use seglab_core::config::{Hdf5Settings, ToolConfig};
use seglab_core::model::{CameraStream, Episode, Seconds, SourceRef, TimeSeriesChannel};

pub use prefetch::{ChunkSource, PrefetchConfig, PrefetchReader, PrefetchStats, SampleRead, CHANNEL_CHUNK, FRAME_CHUNK};

use crate::dataset::{DatasetBackend, EpisodeLocator, IndexEntry};
use crate::detect::{files, has_ext, HDF5_EXTS};
use crate::frame::Frame;
use crate::io::IoStats;
use crate::{FormatError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct H5CameraMap {
    pub name: String,
    pub frames: String,
    pub timestamps: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct H5ChannelMap {
    pub name: String,
    pub values: String,
    pub timestamps: String,
    pub unit: String,
    pub dim_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct H5Mapping {
    pub cameras: Vec<H5CameraMap>,
    pub channels: Vec<H5ChannelMap>,
    pub description_attr: Option<String>,
    pub timestamp_group: String,
}

fn leaf(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

impl Default for H5Mapping {
    fn default() -> Self {
        let s = Hdf5Settings::default();
        Self {
            cameras: Vec::new(),
            channels: Vec::new(),
            description_attr: s.description_attr,
            timestamp_group: s.timestamp_group,
        }
    }
}

impl H5Mapping {
    pub fn from_config(config: &ToolConfig) -> Self {
        let s = config.hdf5.clone().unwrap_or_default();
        let ts = |own: &Option<String>, source: &str| own.clone().unwrap_or_else(|| format!("{}/{}", s.timestamp_group, leaf(source)));
        Self {
            cameras: config
                .cameras
                .iter()
                .map(|c| H5CameraMap {
                    name: c.name.clone(),
                    frames: c.source.clone(),
                    timestamps: ts(&c.timestamps, &c.source),
                })
                .collect(),
            channels: config
                .channels
                .iter()
                .map(|c| H5ChannelMap {
                    name: c.name.clone(),
                    values: c.source.clone(),
                    timestamps: ts(&c.timestamps, &c.source),
                    unit: c.unit.clone().unwrap_or_default(),
                    dim_labels: c.dim_labels.clone(),
                })
                .collect(),
            description_attr: s.description_attr,
            timestamp_group: s.timestamp_group,
        }
    }

    /// Every dataset outside the timestamp group that has a same-named
    /// timestamp array: 4-D `u8` and variable-length datasets become cameras,
    /// 1-D and 2-D numeric ones channels.
    pub fn discover(&self, file: &hdf5::File) -> Result<H5Mapping> {
        let mut out = self.clone();
        let mut stack = vec![String::new()];
        while let Some(group_path) = stack.pop() {
            let group = if group_path.is_empty() {
                file.group("/")
            } else {
                file.group(&group_path)
            }
            .map_err(|e| h5err(file, e))?;
            let mut datasets = group.datasets().map_err(|e| h5err(file, e))?;
            datasets.sort_by_key(|d| d.name());
            for ds in datasets {
                let name = ds.name().rsplit('/').next().unwrap_or_default().to_string();
                let path = if group_path.is_empty() { name.clone() } else { format!("{group_path}/{name}") };
                let ts = format!("{}/{}", self.timestamp_group, name);
                if path.starts_with(&format!("{}/", self.timestamp_group)) || !file.link_exists(&ts) {
                    continue;
                }
                let shape = ds.shape();
                let desc = ds.dtype().and_then(|d| d.to_descriptor()).map_err(|e| h5err(file, e))?;
                let is_frames = matches!(desc, TypeDescriptor::VarLenArray(_)) || (shape.len() == 4 && matches!(desc, TypeDescriptor::Unsigned(_)));
                if is_frames {
                    out.cameras.push(H5CameraMap {
                        name: path.clone(),
                        frames: path,
                        timestamps: ts,
                    });
                } else if shape.len() <= 2 && matches!(desc, TypeDescriptor::Float(_) | TypeDescriptor::Integer(_) | TypeDescriptor::Unsigned(_)) {
                    out.channels.push(H5ChannelMap {
                        name: path.clone(),
                        values: path,
                        timestamps: ts,
                        unit: String::new(),
                        dim_labels: None,
                    });
                }
            }
            for g in group.groups().map_err(|e| h5err(file, e))? {
                let path = g.name().trim_start_matches('/').to_string();
                if path != self.timestamp_group {
                    stack.push(path);
                }
            }
        }
        out.cameras.sort_by(|a, b| a.name.cmp(&b.name));
        out.channels.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(out)
    }
}

fn h5err(file: &hdf5::File, e: hdf5::Error) -> FormatError {
    FormatError::Hdf5 {
        path: PathBuf::from(file.filename()),
        message: e.to_string(),
    }
}

fn dataset(file: &hdf5::File, path: &str) -> Result<hdf5::Dataset> {
    if !file.link_exists(path) {
        return Err(FormatError::Hdf5 {
            path: PathBuf::from(file.filename()),
            message: format!("dataset {path:?} does not exist"),
        });
    }
    file.dataset(path).map_err(|e| h5err(file, e))
}

enum Times {
    Seconds(Vec<f64>),
    Nanos(Vec<i64>),
}

impl Times {
    fn len(&self) -> usize {
        match self {
            Times::Seconds(v) => v.len(),
            Times::Nanos(v) => v.len(),
        }
    }
}

fn read_times(file: &hdf5::File, path: &str) -> Result<Times> {
    let ds = dataset(file, path)?;
    let desc = ds.dtype().and_then(|d| d.to_descriptor()).map_err(|e| h5err(file, e))?;
    Ok(match desc {
        TypeDescriptor::Integer(_) | TypeDescriptor::Unsigned(_) => Times::Nanos(ds.read_raw::<i64>().map_err(|e| h5err(file, e))?),
        _ => Times::Seconds(ds.read_raw::<f64>().map_err(|e| h5err(file, e))?),
    })
}

/// Shifts every array so the earliest first timestamp becomes zero.
fn to_relative(times: Vec<Times>) -> Vec<Vec<Seconds>> {
    let all_nanos = times.iter().all(|t| matches!(t, Times::Nanos(_)));
    if all_nanos {
        let epoch = times
            .iter()
            .filter_map(|t| match t {
                Times::Nanos(v) => v.first().copied(),
                _ => None,
            })
            .min()
            .unwrap_or(0);
        return times
            .into_iter()
            .map(|t| match t {
                Times::Nanos(v) => v.into_iter().map(|n| (n - epoch) as f64 / 1e9).collect(),
                Times::Seconds(_) => unreachable!(),
            })
            .collect();
    }
    let secs: Vec<Vec<f64>> = times
        .into_iter()
        .map(|t| match t {
            Times::Seconds(v) => v,
            Times::Nanos(v) => v.into_iter().map(|n| n as f64 / 1e9).collect(),
        })
        .collect();
    let epoch = secs.iter().filter_map(|v| v.first().copied()).fold(f64::INFINITY, f64::min);
    let epoch = if epoch.is_finite() { epoch } else { 0.0 };
    secs.into_iter().map(|v| v.into_iter().map(|t| t - epoch).collect()).collect()
}

#[derive(Debug, Clone, PartialEq)]
enum StreamKind {
    Rows { dims: usize },
    RawFrames { height: usize, width: usize, channels: usize },
    EncodedFrames,
}

#[derive(Debug, Clone)]
struct SourceStream {
    path: String,
    kind: StreamKind,
    timestamps: Vec<Seconds>,
}

/// Chunked access to one HDF5 episode: cameras first, then channels, in
/// mapping order.
pub struct H5Source {
    file: hdf5::File,
    names: Vec<String>,
    streams: Vec<SourceStream>,
    stats: Arc<IoStats>,
}

impl std::fmt::Debug for H5Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("H5Source").field("file", &self.file.filename()).field("streams", &self.names).finish()
    }
}

impl H5Source {
    pub fn stream_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Turns a camera record into a frame.
    pub fn frame(&self, stream: usize, bytes: Vec<u8>) -> Result<Frame> {
        match self.streams[stream].kind {
            StreamKind::RawFrames { height, width, channels } => Frame::raw(width as u32, height as u32, channels as u8, bytes),
            StreamKind::EncodedFrames => Frame::encoded(bytes),
            StreamKind::Rows { .. } => Err(FormatError::Unsupported(format!("{} is not a camera", self.names[stream]))),
        }
    }
}

impl ChunkSource for H5Source {
    fn stream_count(&self) -> usize {
        self.streams.len()
    }

    fn timestamps(&self, stream: usize) -> &[Seconds] {
        &self.streams[stream].timestamps
    }

    fn chunk_len(&self, stream: usize) -> usize {
        match self.streams[stream].kind {
            StreamKind::Rows { .. } => CHANNEL_CHUNK,
            _ => FRAME_CHUNK,
        }
    }

    fn read_chunk(&self, stream: usize, chunk: usize) -> Result<Vec<Vec<u8>>> {
        let st = &self.streams[stream];
        let n = st.timestamps.len();
        let a = (chunk * self.chunk_len(stream)).min(n);
        let b = ((chunk + 1) * self.chunk_len(stream)).min(n);
        let ds = dataset(&self.file, &st.path)?;
        let err = |e| h5err(&self.file, e);
        let out: Vec<Vec<u8>> = match st.kind {
            StreamKind::Rows { dims } => {
                let values: Vec<f64> = if ds.ndim() == 1 {
                    ds.read_slice_1d::<f64, _>(s![a..b]).map_err(err)?.to_vec()
                } else {
                    ds.read_slice_2d::<f64, _>(s![a..b, ..]).map_err(err)?.iter().copied().collect()
                };
                values.chunks(dims).map(|row| row.iter().flat_map(|v| v.to_le_bytes()).collect()).collect()
            }
            StreamKind::RawFrames { height, width, channels } => {
                let arr = ds.read_slice::<u8, _, Ix4>(s![a..b, .., .., ..]).map_err(err)?;
                let flat: Vec<u8> = arr.iter().copied().collect();
                flat.chunks(height * width * channels).map(|c| c.to_vec()).collect()
            }
            StreamKind::EncodedFrames => ds
                .read_slice_1d::<VarLenArray<u8>, _>(s![a..b])
                .map_err(err)?
                .iter()
                .map(|v| v.as_slice().to_vec())
                .collect(),
        };
        self.stats.add(out.iter().map(|r| r.len() as u64).sum());
        Ok(out)
    }
}

/// Decodes a channel record (little-endian f64s).
pub fn row_values(record: &[u8]) -> Vec<f64> {
    record.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
}

pub struct Reassembled {
    pub episode: Episode,
    pub source: H5Source,
}

fn read_description(file: &hdf5::File, attr: &str) -> Option<String> {
    let a = file.attr(attr).ok()?;
    if let Ok(v) = a.read_scalar::<VarLenUnicode>() {
        return Some(v.as_str().to_string());
    }
    a.read_scalar::<VarLenAscii>().ok().map(|v| v.as_str().to_string())
}

/// Opens one episode file. Channel values are read in full; camera frames
/// stay on disk and are read through the returned source.
pub fn open_reassemble(id: &str, path: &Path, mapping: &H5Mapping, stats: Arc<IoStats>) -> Result<Reassembled> {
    let file = hdf5::File::open(path).map_err(|e| FormatError::Hdf5 {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let discovered;
    let m = if mapping.cameras.is_empty() && mapping.channels.is_empty() {
        discovered = mapping.discover(&file)?;
        &discovered
    } else {
        mapping
    };
    let mismatch = |what: &str, rows: usize, ts: usize| {
        FormatError::Hdf5 {
            path: path.to_path_buf(),
            message: format!("{what}: {rows} rows but {ts} timestamps"),
        }
    };

    let mut kinds = Vec::new();
    let mut names = Vec::new();
    let mut paths = Vec::new();
    let mut times = Vec::new();
    for c in &m.cameras {
        let ds = dataset(&file, &c.frames)?;
        let shape = ds.shape();
        let desc = ds.dtype().and_then(|d| d.to_descriptor()).map_err(|e| h5err(&file, e))?;
        let kind = match (shape.as_slice(), desc) {
            (&[_, h, w, ch], TypeDescriptor::Unsigned(hdf5::types::IntSize::U1)) if matches!(ch, 1 | 3 | 4) => StreamKind::RawFrames {
                height: h,
                width: w,
                channels: ch,
            },
            (&[_], TypeDescriptor::VarLenArray(_)) => StreamKind::EncodedFrames,
            (shape, desc) => {
                return Err(FormatError::Hdf5 {
                    path: path.to_path_buf(),
                    message: format!("camera dataset {:?} has shape {shape:?} and type {desc:?}; expected (N,H,W,C) u8 or variable-length bytes", c.frames),
                })
            }
        };
        let t = read_times(&file, &c.timestamps)?;
        if t.len() != shape[0] {
            return Err(mismatch(&c.frames, shape[0], t.len()));
        }
        kinds.push(kind);
        names.push(c.name.clone());
        paths.push(c.frames.clone());
        times.push(t);
    }
    let mut values = Vec::new();
    for c in &m.channels {
        let ds = dataset(&file, &c.values)?;
        let shape = ds.shape();
        let dims = match shape.as_slice() {
            [_] => 1,
            [_, d] => *d,
            other => {
                return Err(FormatError::Hdf5 {
                    path: path.to_path_buf(),
                    message: format!("channel dataset {:?} has shape {other:?}; expected (N,) or (N,D)", c.values),
                })
            }
        };
        let t = read_times(&file, &c.timestamps)?;
        if t.len() != shape[0] {
            return Err(mismatch(&c.values, shape[0], t.len()));
        }
        let v = ds.read_raw::<f64>().map_err(|e| h5err(&file, e))?;
        stats.add(v.len() as u64 * 8);
        values.push((v, dims));
        kinds.push(StreamKind::Rows { dims });
        names.push(c.name.clone());
        paths.push(c.values.clone());
        times.push(t);
    }
    let relative = to_relative(times);

    let ncams = m.cameras.len();
    let mut cameras = Vec::new();
    for (i, c) in m.cameras.iter().enumerate() {
        cameras.push(CameraStream::new(c.name.clone(), relative[i].clone(), SourceRef(c.frames.clone()))?);
    }
    let mut channels = Vec::new();
    for (j, (c, (v, dims))) in m.channels.iter().zip(values).enumerate() {
        let labels = match &c.dim_labels {
            Some(l) if l.len() == dims => l.clone(),
            Some(l) => return Err(FormatError::Config(format!("channel {:?}: {} dim_labels for {dims} dims", c.name, l.len()))),
            None => (0..dims).map(|i| i.to_string()).collect(),
        };
        channels.push(TimeSeriesChannel::new(c.name.clone(), c.unit.clone(), labels, relative[ncams + j].clone(), v)?);
    }
    let description = m.description_attr.as_deref().and_then(|a| read_description(&file, a));
    let episode = Episode::new(id, cameras, channels, description)?;
    let streams = paths
        .into_iter()
        .zip(kinds)
        .zip(relative)
        .map(|((path, kind), timestamps)| SourceStream { path, kind, timestamps })
        .collect();
    Ok(Reassembled {
        episode,
        source: H5Source { file, names, streams, stats },
    })
}

const READERS: usize = 4;

struct H5Backend {
    root: PathBuf,
    mapping: H5Mapping,
    stats: Arc<IoStats>,
    readers: Mutex<VecDeque<(String, Arc<PrefetchReader<H5Source>>)>>,
}

pub fn open(config: &ToolConfig, stats: Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> {
    Ok(Box::new(H5Backend {
        root: config.data_path.clone(),
        mapping: H5Mapping::from_config(config),
        stats,
        readers: Mutex::new(VecDeque::new()),
    }))
}

impl H5Backend {
    fn path(entry: &IndexEntry) -> &Path {
        match &entry.locator {
            EpisodeLocator::File(p) => p,
            other => panic!("hdf5 adapter given foreign locator {other:?}"),
        }
    }

    fn reader(&self, entry: &IndexEntry) -> Result<Arc<PrefetchReader<H5Source>>> {
        if let Some((_, r)) = self.readers.lock().unwrap().iter().find(|(id, _)| id == &entry.id) {
            return Ok(r.clone());
        }
        self.load(entry)?;
        let readers = self.readers.lock().unwrap();
        Ok(readers.iter().find(|(id, _)| id == &entry.id).map(|(_, r)| r.clone()).expect("load registers a reader"))
    }
}

impl DatasetBackend for H5Backend {
    fn build_index(&self) -> Result<Vec<IndexEntry>> {
        let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let paths = if self.root.is_file() {
            vec![self.root.clone()]
        } else {
            files(&self.root)
                .map_err(|e| FormatError::io(&self.root, e))?
                .into_iter()
                .filter(|p| has_ext(p, HDF5_EXTS))
                .collect()
        };
        Ok(paths
            .into_iter()
            .map(|p| IndexEntry {
                id: stem(&p),
                locator: EpisodeLocator::File(p),
                duration: None,
            })
            .collect())
    }

    fn load(&self, entry: &IndexEntry) -> Result<Episode> {
        let r = open_reassemble(&entry.id, Self::path(entry), &self.mapping, self.stats.clone())?;
        let ncams = r.episode.cameras.len();
        let config = PrefetchConfig {
            capacity: 4 * ncams.max(1),
            ..PrefetchConfig::default()
        };
        let reader = Arc::new(PrefetchReader::new(r.source, config)?);
        let mut readers = self.readers.lock().unwrap();
        readers.retain(|(id, _)| id != &entry.id);
        readers.push_back((entry.id.clone(), reader));
        while readers.len() > READERS {
            readers.pop_front();
        }
        Ok(r.episode)
    }

    fn frame(&self, entry: &IndexEntry, _episode: &Episode, camera: &str, index: usize) -> Result<Frame> {
        let reader = self.reader(entry)?;
        let stream = reader
            .source()
            .stream_index(camera)
            .ok_or_else(|| FormatError::UnknownStream(camera.to_string()))?;
        let read = reader.read_index(stream, index)?;
        reader.source().frame(stream, read.data)
    }
}
