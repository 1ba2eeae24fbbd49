//! Chunked reads with a background loader that keeps the chunks around the
//! playhead resident.
//!
//! Every stream is cut into fixed-size sample chunks. For a playhead in chunk
//! `c` of a stream, its window is `[c - behind, c + ahead]`. The loader thread
//! fills windows nearest-first; chunks that leave their window are dropped.
//! The resident set is shared by all streams and never exceeds `capacity`.
//! A read whose chunk is not resident reads it directly instead of waiting.

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use seglab_core::model::Seconds;
use seglab_core::sync::nearest_index;

use crate::{FormatError, Result};

pub const CHANNEL_CHUNK: usize = 256;
pub const FRAME_CHUNK: usize = 16;

/// Something that can be read a chunk at a time.
pub trait ChunkSource: Send + Sync + 'static {
    fn stream_count(&self) -> usize;
    fn timestamps(&self, stream: usize) -> &[Seconds];
    fn chunk_len(&self, stream: usize) -> usize;
    /// One byte record per sample of chunk `chunk`.
    fn read_chunk(&self, stream: usize, chunk: usize) -> Result<Vec<Vec<u8>>>;

    fn chunk_count(&self, stream: usize) -> usize {
        self.timestamps(stream).len().div_ceil(self.chunk_len(stream).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefetchConfig {
    /// Maximum resident chunks over all streams.
    pub capacity: usize,
    pub ahead: usize,
    pub behind: usize,
}

impl Default for PrefetchConfig {
    fn default() -> Self {
        Self {
            capacity: 4,
            ahead: 2,
            behind: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrefetchStats {
    pub hits: u64,
    pub misses: u64,
    /// Chunks loaded by the background thread.
    pub prefetched: u64,
    pub evictions: u64,
    /// Most chunks ever resident at once.
    pub max_resident: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRead {
    pub index: usize,
    pub data: Vec<u8>,
    /// The chunk was already resident.
    pub hit: bool,
}

type Chunk = Arc<Vec<Vec<u8>>>;

struct State {
    centers: Vec<Option<usize>>,
    resident: BTreeMap<(usize, usize), Chunk>,
    failed: HashSet<(usize, usize)>,
    loading: Option<(usize, usize)>,
    shutdown: bool,
    stats: PrefetchStats,
}

struct Shared<S> {
    source: S,
    config: PrefetchConfig,
    state: Mutex<State>,
    wake: Condvar,
}

/// Distance of `chunk` from the playhead chunk, ahead before behind;
/// `None` outside the window.
fn rank(config: &PrefetchConfig, center: usize, chunk: usize) -> Option<usize> {
    if chunk >= center {
        let d = chunk - center;
        (d <= config.ahead).then_some(d)
    } else {
        let d = center - chunk;
        (d <= config.behind).then_some(config.ahead + d)
    }
}

impl<S: ChunkSource> Shared<S> {
    fn rank_of(&self, st: &State, (stream, chunk): (usize, usize)) -> Option<usize> {
        st.centers[stream].and_then(|c| rank(&self.config, c, chunk))
    }

    /// Highest-ranked resident chunk, other than `keep`.
    fn farthest(&self, st: &State, keep: (usize, usize)) -> Option<((usize, usize), usize)> {
        st.resident
            .keys()
            .filter(|k| **k != keep)
            .map(|k| (*k, self.rank_of(st, *k).unwrap_or(usize::MAX)))
            .max_by_key(|(k, r)| (*r, k.0, k.1))
    }

    /// Next chunk the loader should fetch, evicting a farther one if full.
    fn next_job(&self, st: &mut State) -> Option<(usize, usize)> {
        let mut best: Option<(usize, (usize, usize))> = None;
        for (stream, center) in st.centers.iter().enumerate() {
            let Some(c) = *center else { continue };
            let n = self.source.chunk_count(stream);
            let lo = c.saturating_sub(self.config.behind);
            let hi = (c + self.config.ahead).min(n.saturating_sub(1));
            for k in lo..=hi {
                let key = (stream, k);
                if st.resident.contains_key(&key) || st.failed.contains(&key) || st.loading == Some(key) {
                    continue;
                }
                let r = rank(&self.config, c, k).unwrap();
                if best.is_none_or(|(br, _)| r < br) {
                    best = Some((r, key));
                }
            }
        }
        let (r, key) = best?;
        if st.resident.len() + usize::from(st.loading.is_some()) >= self.config.capacity {
            match self.farthest(st, key) {
                Some((victim, vr)) if vr > r => {
                    st.resident.remove(&victim);
                    st.stats.evictions += 1;
                }
                _ => return None,
            }
        }
        Some(key)
    }

    /// Makes `key` resident if it is in a window. With `force` unset it only
    /// displaces chunks farther from their playhead than itself.
    fn insert(&self, st: &mut State, key: (usize, usize), chunk: Chunk, force: bool) -> bool {
        if st.resident.contains_key(&key) {
            return false;
        }
        let Some(r) = self.rank_of(st, key) else { return false };
        while st.resident.len() >= self.config.capacity {
            match self.farthest(st, key) {
                Some((victim, vr)) if force || vr > r => {
                    st.resident.remove(&victim);
                    st.stats.evictions += 1;
                }
                _ => return false,
            }
        }
        st.resident.insert(key, chunk);
        st.stats.max_resident = st.stats.max_resident.max(st.resident.len());
        true
    }

    fn run(self: Arc<Self>) {
        let mut st = self.state.lock().unwrap();
        loop {
            if st.shutdown {
                return;
            }
            let Some(key) = self.next_job(&mut st) else {
                self.wake.notify_all();
                st = self.wake.wait(st).unwrap();
                continue;
            };
            st.loading = Some(key);
            drop(st);
            let result = self.source.read_chunk(key.0, key.1);
            st = self.state.lock().unwrap();
            st.loading = None;
            match result {
                Ok(chunk) => {
                    if self.insert(&mut st, key, Arc::new(chunk), false) {
                        st.stats.prefetched += 1;
                    }
                }
                // a direct read will surface the error to the caller
                Err(_) => {
                    st.failed.insert(key);
                }
            }
            self.wake.notify_all();
        }
    }
}

pub struct PrefetchReader<S: ChunkSource> {
    shared: Arc<Shared<S>>,
    worker: Option<JoinHandle<()>>,
}

impl<S: ChunkSource> PrefetchReader<S> {
    pub fn new(source: S, config: PrefetchConfig) -> Result<Self> {
        if config.capacity < config.ahead + config.behind + 1 {
            return Err(FormatError::Config(format!(
                "prefetch capacity {} is below ahead + behind + 1 = {}",
                config.capacity,
                config.ahead + config.behind + 1
            )));
        }
        let streams = source.stream_count();
        let shared = Arc::new(Shared {
            source,
            config,
            state: Mutex::new(State {
                centers: vec![None; streams],
                resident: BTreeMap::new(),
                failed: HashSet::new(),
                loading: None,
                shutdown: false,
                stats: PrefetchStats::default(),
            }),
            wake: Condvar::new(),
        });
        let worker = {
            let shared = shared.clone();
            std::thread::Builder::new()
                .name("prefetch".into())
                .spawn(move || shared.run())
                .map_err(|e| FormatError::Config(format!("cannot start prefetch thread: {e}")))?
        };
        Ok(Self {
            shared,
            worker: Some(worker),
        })
    }

    pub fn source(&self) -> &S {
        &self.shared.source
    }

    pub fn config(&self) -> PrefetchConfig {
        self.shared.config
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.shared.state.lock().unwrap()
    }

    /// Sample of `stream` nearest to `t`.
    pub fn read(&self, stream: usize, t: Seconds) -> Result<SampleRead> {
        let ts = self.check(stream)?.timestamps(stream);
        let index = nearest_index(ts, t).map_err(|e| FormatError::OutOfRange(e.to_string()))?;
        self.read_index(stream, index)
    }

    fn check(&self, stream: usize) -> Result<&S> {
        let s = &self.shared.source;
        if stream >= s.stream_count() {
            return Err(FormatError::OutOfRange(format!("stream {stream} of {}", s.stream_count())));
        }
        Ok(s)
    }

    /// Sample `index` of `stream`; moves that stream's playhead there.
    pub fn read_index(&self, stream: usize, index: usize) -> Result<SampleRead> {
        let source = self.check(stream)?;
        let len = source.timestamps(stream).len();
        if index >= len {
            return Err(FormatError::OutOfRange(format!("sample {index} of stream {stream} (has {len})")));
        }
        let chunk_len = source.chunk_len(stream).max(1);
        let (chunk, offset) = (index / chunk_len, index % chunk_len);
        let key = (stream, chunk);

        let mut st = self.lock();
        if st.centers[stream] != Some(chunk) {
            st.centers[stream] = Some(chunk);
            st.failed.retain(|k| k.0 != stream);
            let shared = &self.shared;
            let outside: Vec<_> = st.resident.keys().filter(|k| shared.rank_of(&st, **k).is_none()).copied().collect();
            for k in outside {
                st.resident.remove(&k);
                st.stats.evictions += 1;
            }
            self.shared.wake.notify_all();
        }
        if let Some(c) = st.resident.get(&key).cloned() {
            st.stats.hits += 1;
            drop(st);
            return Ok(SampleRead {
                index,
                data: record(&c, offset, key)?,
                hit: true,
            });
        }
        st.stats.misses += 1;
        drop(st);

        let c: Chunk = Arc::new(source.read_chunk(stream, chunk)?);
        let data = record(&c, offset, key)?;
        let mut st = self.lock();
        self.shared.insert(&mut st, key, c, true);
        self.shared.wake.notify_all();
        Ok(SampleRead { index, data, hit: false })
    }

    /// Resident `(stream, chunk)` keys.
    pub fn resident(&self) -> Vec<(usize, usize)> {
        self.lock().resident.keys().copied().collect()
    }

    pub fn stats(&self) -> PrefetchStats {
        self.lock().stats
    }

    /// Blocks until the loader has nothing left to do, or `timeout` passes.
    /// Returns whether it went idle.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut st = self.lock();
        loop {
            let busy = st.loading.is_some() || {
                // probe without mutating: a job exists if any window slot is
                // missing and there is room (or something farther to drop)
                let probe = &mut State {
                    centers: st.centers.clone(),
                    resident: st.resident.clone(),
                    failed: st.failed.clone(),
                    loading: None,
                    shutdown: false,
                    stats: st.stats,
                };
                self.shared.next_job(probe).is_some()
            };
            if !busy {
                return true;
            }
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            st = self.shared.wake.wait_timeout(st, deadline - now).unwrap().0;
        }
    }
}

fn record(chunk: &[Vec<u8>], offset: usize, key: (usize, usize)) -> Result<Vec<u8>> {
    chunk
        .get(offset)
        .cloned()
        .ok_or_else(|| FormatError::decode(format!("stream {} chunk {}", key.0, key.1), format!("chunk has no record {offset}")))
}

impl<S: ChunkSource> Drop for PrefetchReader<S> {
    fn drop(&mut self) {
        self.lock().shutdown = true;
        self.shared.wake.notify_all();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
