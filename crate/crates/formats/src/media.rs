//! Video files and directories of extracted frames.
//!
//! Three layouts are recognized: a single input (one video file, or one
//! directory of frames), a flat directory with one entry per episode, and a
//! directory of per-camera subdirectories that each hold every episode.
//! Files with other extensions are skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use seglab_core::config::{DatasetFormat, ToolConfig};
use seglab_core::model::{CameraStream, Episode, Seconds, SourceRef};

use crate::dataset::{Constructor, DatasetBackend, EpisodeLocator, IndexEntry};
use crate::detect::{files, has_ext, list_dir, subdirs, IMAGE_EXTS, VIDEO_EXTS};
use crate::frame::Frame;
use crate::io::IoStats;
use crate::{FormatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MediaKind {
    Video,
    Frames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    SingleFile,
    FlatPerEpisode,
    MultiCameraSubdirs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediaSource {
    pub id: String,
    /// `(camera, path)`: a video file or a directory of frames.
    pub cameras: Vec<(String, PathBuf)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediaLayout {
    pub kind: LayoutKind,
    pub episodes: Vec<MediaSource>,
}

fn name_of(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn stem_of(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Image files of a frames directory in natural order (`frame_2` before `frame_10`).
pub fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut fs: Vec<PathBuf> = files(dir)
        .map_err(|e| FormatError::io(dir, e))?
        .into_iter()
        .filter(|p| has_ext(p, IMAGE_EXTS))
        .collect();
    fs.sort_by(|a, b| natord::compare(&name_of(a), &name_of(b)));
    Ok(fs)
}

fn is_frames_dir(dir: &Path) -> Result<bool> {
    Ok(!frame_files(dir)?.is_empty())
}

fn ambiguous(path: &Path) -> FormatError {
    FormatError::Config(format!(
        "{} mixes media files and media subdirectories; point data_path at one layout explicitly",
        path.display()
    ))
}

fn multi_camera(path: &Path, by_camera: BTreeMap<String, BTreeMap<String, PathBuf>>) -> Result<MediaLayout> {
    let all: BTreeSet<&String> = by_camera.values().flat_map(|m| m.keys()).collect();
    for (cam, eps) in &by_camera {
        if let Some(missing) = all.iter().find(|id| !eps.contains_key(**id)) {
            return Err(FormatError::Config(format!(
                "{}: camera {cam} has no episode {missing}; every camera subdirectory must hold the same episodes",
                path.display()
            )));
        }
    }
    let episodes = all
        .into_iter()
        .map(|id| MediaSource {
            id: id.clone(),
            cameras: by_camera.iter().map(|(cam, eps)| (cam.clone(), eps[id].clone())).collect(),
        })
        .collect();
    Ok(MediaLayout {
        kind: LayoutKind::MultiCameraSubdirs,
        episodes,
    })
}

/// Classifies `path`. `camera` names the only camera of single and flat layouts.
pub fn detect_layout(path: &Path, kind: MediaKind, camera: &str) -> Result<MediaLayout> {
    let io = |e| FormatError::io(path, e);
    std::fs::metadata(path).map_err(io)?;
    let single = |id: String| MediaLayout {
        kind: LayoutKind::SingleFile,
        episodes: vec![MediaSource {
            id,
            cameras: vec![(camera.to_string(), path.to_path_buf())],
        }],
    };
    let flat = |items: Vec<(String, PathBuf)>| MediaLayout {
        kind: LayoutKind::FlatPerEpisode,
        episodes: items
            .into_iter()
            .map(|(id, p)| MediaSource {
                id,
                cameras: vec![(camera.to_string(), p)],
            })
            .collect(),
    };
    match kind {
        MediaKind::Video | MediaKind::Frames if path.is_dir() && list_dir(path).map_err(io)?.is_empty() => Ok(MediaLayout {
            kind: LayoutKind::FlatPerEpisode,
            episodes: Vec::new(),
        }),
        MediaKind::Video => {
            if path.is_file() {
                if !has_ext(path, VIDEO_EXTS) {
                    return Err(FormatError::Config(format!("{} is not a video file", path.display())));
                }
                return Ok(single(stem_of(path)));
            }
            let videos: Vec<PathBuf> = files(path).map_err(io)?.into_iter().filter(|p| has_ext(p, VIDEO_EXTS)).collect();
            let mut by_camera = BTreeMap::new();
            for d in subdirs(path).map_err(io)? {
                let eps: BTreeMap<String, PathBuf> = files(&d)
                    .map_err(io)?
                    .into_iter()
                    .filter(|p| has_ext(p, VIDEO_EXTS))
                    .map(|p| (stem_of(&p), p))
                    .collect();
                if !eps.is_empty() {
                    by_camera.insert(name_of(&d), eps);
                }
            }
            match (videos.is_empty(), by_camera.is_empty()) {
                (false, false) => Err(ambiguous(path)),
                (false, true) => Ok(flat(videos.into_iter().map(|p| (stem_of(&p), p)).collect())),
                (true, false) => multi_camera(path, by_camera),
                (true, true) => Err(FormatError::Config(format!("{} holds no video files", path.display()))),
            }
        }
        MediaKind::Frames => {
            if !path.is_dir() {
                return Err(FormatError::Config(format!("{} is not a directory of frames", path.display())));
            }
            let direct = is_frames_dir(path)?;
            let mut episodes = Vec::new();
            let mut by_camera = BTreeMap::new();
            for d in subdirs(path).map_err(io)? {
                if is_frames_dir(&d)? {
                    episodes.push((name_of(&d), d.clone()));
                }
                let mut eps = BTreeMap::new();
                for dd in subdirs(&d).map_err(io)? {
                    if is_frames_dir(&dd)? {
                        eps.insert(name_of(&dd), dd);
                    }
                }
                if !eps.is_empty() {
                    by_camera.insert(name_of(&d), eps);
                }
            }
            match (direct, !episodes.is_empty(), !by_camera.is_empty()) {
                (true, false, false) => Ok(single(name_of(path))),
                (false, true, false) => Ok(flat(episodes)),
                (false, false, true) => multi_camera(path, by_camera),
                (false, false, false) => Err(FormatError::Config(format!("{} holds no image frames", path.display()))),
                _ => Err(ambiguous(path)),
            }
        }
    }
}

/// Access to video frames. Codec support lives outside this crate.
pub trait VideoDecoder: Send + Sync {
    fn frame_count(&self, path: &Path) -> Result<usize>;
    fn decode_frame(&self, path: &Path, index: usize) -> Result<Frame>;
}

/// Shells out to `ffprobe` and `ffmpeg` from `PATH`.
#[derive(Debug, Default, Clone)]
pub struct FfmpegDecoder;

fn run(cmd: &mut Command, what: &str) -> Result<Vec<u8>> {
    let out = cmd
        .output()
        .map_err(|e| FormatError::Unsupported(format!("{what} is needed to read video ({e})")))?;
    if !out.status.success() {
        return Err(FormatError::decode(what, String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(out.stdout)
}

impl VideoDecoder for FfmpegDecoder {
    fn frame_count(&self, path: &Path) -> Result<usize> {
        let out = run(
            Command::new("ffprobe")
                .args(["-v", "error", "-select_streams", "v:0", "-count_packets", "-show_entries", "stream=nb_read_packets", "-of", "csv=p=0"])
                .arg(path),
            "ffprobe",
        )?;
        String::from_utf8_lossy(&out)
            .trim()
            .parse()
            .map_err(|_| FormatError::decode(path.display().to_string(), "ffprobe returned no frame count"))
    }

    fn decode_frame(&self, path: &Path, index: usize) -> Result<Frame> {
        let out = run(
            Command::new("ffmpeg")
                .args(["-v", "error", "-i"])
                .arg(path)
                .args(["-vf", &format!("select=eq(n\\,{index})"), "-vframes", "1", "-f", "image2pipe", "-vcodec", "png", "-"]),
            "ffmpeg",
        )?;
        if out.is_empty() {
            return Err(FormatError::decode(format!("{} frame {index}", path.display()), "no such frame"));
        }
        Ok(Frame {
            kind: crate::frame::FrameKind::Png,
            bytes: out,
        })
    }
}

/// Builds an episode whose camera `c` has `counts[c]` frames at `fps`.
pub fn media_episode(source: &MediaSource, counts: &[usize], fps: f64) -> Result<Episode> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(FormatError::Config(format!("video_fps must be positive, got {fps}")));
    }
    let mut cameras = Vec::new();
    for ((name, path), &n) in source.cameras.iter().zip(counts) {
        if n == 0 {
            return Err(FormatError::decode(path.display().to_string(), "no frames"));
        }
        let ts = (0..n).map(|k| k as f64 / fps).collect();
        cameras.push(CameraStream::new(name.clone(), ts, SourceRef(path.display().to_string()))?);
    }
    Ok(Episode::new(source.id.clone(), cameras, Vec::new(), None)?)
}

fn duration(counts: impl Iterator<Item = usize>, fps: f64) -> Seconds {
    counts.max().unwrap_or(1).saturating_sub(1) as f64 / fps
}

struct MediaBackend {
    kind: MediaKind,
    root: PathBuf,
    fps: f64,
    camera: String,
    decoder: Arc<dyn VideoDecoder>,
    stats: Arc<IoStats>,
    listings: Mutex<HashMap<PathBuf, Arc<Vec<PathBuf>>>>,
}

impl MediaBackend {
    fn new(kind: MediaKind, config: &ToolConfig, stats: Arc<IoStats>, decoder: Arc<dyn VideoDecoder>) -> Result<Self> {
        let fps = config
            .video_fps
            .ok_or_else(|| FormatError::Config(format!("video_fps is required for {}", config.dataset_format)))?;
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(FormatError::Config(format!("video_fps must be positive, got {fps}")));
        }
        Ok(Self {
            kind,
            root: config.data_path.clone(),
            fps,
            camera: config.cameras.first().map(|c| c.name.clone()).unwrap_or_else(|| "main".into()),
            decoder,
            stats,
            listings: Mutex::new(HashMap::new()),
        })
    }

    fn listing(&self, dir: &Path) -> Result<Arc<Vec<PathBuf>>> {
        if let Some(l) = self.listings.lock().unwrap().get(dir) {
            return Ok(l.clone());
        }
        let l = Arc::new(frame_files(dir)?);
        self.listings.lock().unwrap().insert(dir.to_path_buf(), l.clone());
        Ok(l)
    }

    fn count(&self, path: &Path) -> Result<usize> {
        match self.kind {
            MediaKind::Frames => Ok(self.listing(path)?.len()),
            MediaKind::Video => self.decoder.frame_count(path),
        }
    }

    fn sources(entry: &IndexEntry) -> &[(String, PathBuf)] {
        match &entry.locator {
            EpisodeLocator::Media(c) => c,
            other => panic!("media adapter given foreign locator {other:?}"),
        }
    }
}

impl DatasetBackend for MediaBackend {
    fn build_index(&self) -> Result<Vec<IndexEntry>> {
        let layout = detect_layout(&self.root, self.kind, &self.camera)?;
        layout
            .episodes
            .into_iter()
            .map(|e| {
                // frame listings are directory metadata, so durations are cheap
                let duration = match self.kind {
                    MediaKind::Frames => {
                        let counts = e.cameras.iter().map(|(_, p)| self.count(p)).collect::<Result<Vec<_>>>()?;
                        Some(duration(counts.into_iter(), self.fps))
                    }
                    MediaKind::Video => None,
                };
                Ok(IndexEntry {
                    id: e.id,
                    locator: EpisodeLocator::Media(e.cameras),
                    duration,
                })
            })
            .collect()
    }

    fn load(&self, entry: &IndexEntry) -> Result<Episode> {
        let cams = Self::sources(entry);
        let counts = cams.iter().map(|(_, p)| self.count(p)).collect::<Result<Vec<_>>>()?;
        media_episode(
            &MediaSource {
                id: entry.id.clone(),
                cameras: cams.to_vec(),
            },
            &counts,
            self.fps,
        )
    }

    fn frame(&self, entry: &IndexEntry, _episode: &Episode, camera: &str, index: usize) -> Result<Frame> {
        let path = Self::sources(entry)
            .iter()
            .find(|(c, _)| c == camera)
            .map(|(_, p)| p)
            .ok_or_else(|| FormatError::UnknownStream(camera.to_string()))?;
        match self.kind {
            MediaKind::Video => self.decoder.decode_frame(path, index),
            MediaKind::Frames => {
                let listing = self.listing(path)?;
                let file = listing
                    .get(index)
                    .ok_or_else(|| FormatError::OutOfRange(format!("frame {index} of {camera}")))?;
                let bytes = crate::io::read_file(file, &self.stats)?;
                Frame::encoded(bytes).map_err(|e| FormatError::decode(format!("{} (frame {index})", file.display()), e))
            }
        }
    }
}

pub fn open_frames(config: &ToolConfig, stats: Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> {
    Ok(Box::new(MediaBackend::new(MediaKind::Frames, config, stats, Arc::new(FfmpegDecoder))?))
}

pub fn open_video(config: &ToolConfig, stats: Arc<IoStats>) -> Result<Box<dyn DatasetBackend>> {
    Ok(Box::new(MediaBackend::new(MediaKind::Video, config, stats, Arc::new(FfmpegDecoder))?))
}

/// Video adapter constructor with a caller-supplied decoder, for
/// [`crate::Registry::register`].
pub fn video_with_decoder(decoder: Arc<dyn VideoDecoder>) -> Constructor {
    Arc::new(move |config: &ToolConfig, stats: Arc<IoStats>| {
        debug_assert_eq!(config.dataset_format, DatasetFormat::Video);
        Ok(Box::new(MediaBackend::new(MediaKind::Video, config, stats, decoder.clone())?) as Box<dyn DatasetBackend>)
    })
}
