//! Byte accounting for dataset reads.

use std::io::{self, Read, Seek, SeekFrom};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

#[derive(Debug, Default)]
pub struct IoStats {
    bytes: AtomicU64,
}

impl IoStats {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn add(&self, n: u64) {
        self.bytes.fetch_add(n, Ordering::Relaxed);
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes.load(Ordering::Relaxed)
    }
}

/// Reader wrapper that adds every byte it returns to an [`IoStats`].
pub struct CountingReader<R> {
    inner: R,
    stats: Arc<IoStats>,
}

impl<R> CountingReader<R> {
    pub fn new(inner: R, stats: Arc<IoStats>) -> Self {
        Self { inner, stats }
    }

    pub fn into_inner(self) -> R {
        self.inner
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.stats.add(n as u64);
        Ok(n)
    }
}

impl<R: Seek> Seek for CountingReader<R> {
    fn seek(&mut self, pos: SeekFrom) -> io::Result<u64> {
        self.inner.seek(pos)
    }
}

/// Reads a whole file, counting its bytes.
pub(crate) fn read_file(path: &std::path::Path, stats: &IoStats) -> crate::Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| crate::FormatError::io(path, e))?;
    stats.add(bytes.len() as u64);
    Ok(bytes)
}
