//! Content-based format detection.
//!
//! Each detector looks at one path and answers yes or no. Directory listings
//! are sorted before inspection so answers never depend on readdir order.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

pub const ROSBAG1_MAGIC: &[u8] = b"#ROSBAG V2.0\n";
pub const VIDEO_EXTS: &[&str] = &["mp4", "avi", "mkv"];
pub const IMAGE_EXTS: &[&str] = &["jpg", "jpeg", "png"];
pub const HDF5_EXTS: &[&str] = &["h5", "hdf5"];

pub(crate) fn has_ext(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
        .unwrap_or(false)
}

/// Sorted `(path, is_dir)` entries; hidden files are skipped.
pub(crate) fn list_dir(path: &Path) -> io::Result<Vec<(PathBuf, bool)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(path)? {
        let entry = entry?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        let is_dir = fs::metadata(entry.path())?.is_dir();
        out.push((entry.path(), is_dir));
    }
    out.sort();
    Ok(out)
}

pub(crate) fn files(path: &Path) -> io::Result<Vec<PathBuf>> {
    Ok(list_dir(path)?.into_iter().filter(|(_, d)| !d).map(|(p, _)| p).collect())
}

pub(crate) fn subdirs(path: &Path) -> io::Result<Vec<PathBuf>> {
    Ok(list_dir(path)?.into_iter().filter(|(_, d)| *d).map(|(p, _)| p).collect())
}

pub fn has_rosbag1_magic(path: &Path) -> io::Result<bool> {
    let mut head = [0u8; 13];
    let mut f = fs::File::open(path)?;
    let mut got = 0;
    while got < head.len() {
        match f.read(&mut head[got..])? {
            0 => return Ok(false),
            n => got += n,
        }
    }
    Ok(head == ROSBAG1_MAGIC)
}

pub fn detect_rosbag1(path: &Path) -> io::Result<bool> {
    if path.is_file() {
        return has_rosbag1_magic(path);
    }
    for f in files(path)? {
        if has_rosbag1_magic(&f)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn is_rosbag2_dir(path: &Path) -> io::Result<bool> {
    if !path.is_dir() {
        return Ok(false);
    }
    let fs = files(path)?;
    let meta = fs.iter().any(|p| p.file_name().is_some_and(|n| n == "metadata.yaml"));
    let db = fs.iter().any(|p| has_ext(p, &["db3"]));
    Ok(meta && db)
}

/// A bag directory, or a directory whose subdirectories are all bag directories.
pub fn detect_rosbag2(path: &Path) -> io::Result<bool> {
    if is_rosbag2_dir(path)? {
        return Ok(true);
    }
    if !path.is_dir() {
        return Ok(false);
    }
    let subs = subdirs(path)?;
    if subs.is_empty() {
        return Ok(false);
    }
    for s in &subs {
        if !is_rosbag2_dir(s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn detect_rlds(path: &Path) -> io::Result<bool> {
    if !path.is_dir() {
        return Ok(false);
    }
    let fs = files(path)?;
    let info = fs.iter().any(|p| p.file_name().is_some_and(|n| n == "dataset_info.json"));
    let shard = fs.iter().any(|p| p.file_name().is_some_and(|n| n.to_string_lossy().contains(".tfrecord")));
    Ok(info && shard)
}

pub fn detect_reassemble(path: &Path) -> io::Result<bool> {
    if path.is_file() {
        return Ok(has_ext(path, HDF5_EXTS));
    }
    Ok(files(path)?.iter().any(|p| has_ext(p, HDF5_EXTS)))
}

/// Media files directly in `path`, or in its immediate subdirectories.
fn detect_media(path: &Path, exts: &[&str], allow_file: bool) -> io::Result<bool> {
    if path.is_file() {
        return Ok(allow_file && has_ext(path, exts));
    }
    if files(path)?.iter().any(|p| has_ext(p, exts)) {
        return Ok(true);
    }
    for s in subdirs(path)? {
        if files(&s)?.iter().any(|p| has_ext(p, exts)) {
            return Ok(true);
        }
        // frames may nest one level deeper (camera/episode/frame.png)
        if !allow_file {
            for ss in subdirs(&s)? {
                if files(&ss)?.iter().any(|p| has_ext(p, exts)) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

pub fn detect_video(path: &Path) -> io::Result<bool> {
    detect_media(path, VIDEO_EXTS, true)
}

pub fn detect_frames(path: &Path) -> io::Result<bool> {
    detect_media(path, IMAGE_EXTS, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_matching_ignores_case() {
        assert!(has_ext(Path::new("a/B.MP4"), VIDEO_EXTS));
        assert!(!has_ext(Path::new("a/mp4"), VIDEO_EXTS));
    }

    #[test]
    fn short_file_has_no_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bag");
        fs::write(&p, b"#ROSBAG").unwrap();
        assert!(!has_rosbag1_magic(&p).unwrap());
        fs::write(&p, b"#ROSBAG V2.0\nrest").unwrap();
        assert!(has_rosbag1_magic(&p).unwrap());
    }
}
