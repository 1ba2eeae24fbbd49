//! Multi-stream time synchronization.
//!
//! Every stream keeps its own sorted timestamp array. A query time maps to the
//! nearest sample of each stream by binary search; nothing is resampled.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Episode, Seconds, TimeSeriesChannel};

#[derive(Debug, Error, PartialEq)]
pub enum SyncError {
    #[error("timestamp array is empty")]
    Empty,
    #[error("query time is not finite")]
    NonFinite,
    #[error("stream {0:?} has no samples")]
    EmptyStream(String),
    #[error("stream {0:?}: timestamps must be sorted")]
    Unsorted(String),
    #[error("invalid window [{from}, {to}] with max_points {max_points}")]
    InvalidWindow { from: f64, to: f64, max_points: usize },
}

/// Index of the sample closest to `t`.
///
/// Ties go to the smaller index and queries outside the array clamp to its
/// first or last element. `timestamps` must be sorted non-decreasing.
pub fn nearest_index(timestamps: &[Seconds], t: Seconds) -> Result<usize, SyncError> {
    if timestamps.is_empty() {
        return Err(SyncError::Empty);
    }
    if t.is_nan() {
        return Err(SyncError::NonFinite);
    }
    let right = timestamps.partition_point(|&x| x < t);
    if right == 0 {
        return Ok(0);
    }
    if right == timestamps.len() {
        let last = timestamps[right - 1];
        return Ok(timestamps.partition_point(|&x| x < last));
    }
    let left_value = timestamps[right - 1];
    if t - left_value <= timestamps[right] - t {
        // earliest occurrence of a duplicated value
        Ok(timestamps.partition_point(|&x| x < left_value))
    } else {
        Ok(right)
    }
}

/// Sorted timestamp arrays of every enabled stream.
#[derive(Debug, Clone)]
pub struct TimeIndex {
    streams: Vec<(String, Vec<Seconds>)>,
    duration: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamMatch {
    pub stream: String,
    pub index: usize,
    pub timestamp: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncSnapshot {
    pub t: Seconds,
    pub matches: Vec<StreamMatch>,
}

impl TimeIndex {
    pub fn new(streams: Vec<(String, Vec<Seconds>)>) -> Result<Self, SyncError> {
        for (name, ts) in &streams {
            if ts.is_empty() {
                return Err(SyncError::EmptyStream(name.clone()));
            }
            if ts.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(SyncError::Unsorted(name.clone()));
            }
        }
        let duration = streams
            .iter()
            .map(|(_, ts)| *ts.last().unwrap())
            .fold(0.0, f64::max);
        Ok(Self { streams, duration })
    }

    /// Index over every non-empty camera and channel of `episode`.
    pub fn from_episode(episode: &Episode) -> Self {
        let streams = episode
            .cameras
            .iter()
            .map(|c| (c.name.clone(), c.frame_timestamps.clone()))
            .chain(episode.channels.iter().map(|c| (c.name.clone(), c.timestamps.clone())))
            .filter(|(_, ts)| !ts.is_empty())
            .collect();
        Self::new(streams).expect("episode streams are sorted")
    }

    pub fn duration(&self) -> Seconds {
        self.duration
    }

    pub fn stream_names(&self) -> impl Iterator<Item = &str> {
        self.streams.iter().map(|(n, _)| n.as_str())
    }

    /// Matches every stream for which `enabled` returns true against `t`,
    /// clamped to `[0, T]`.
    pub fn snapshot_filtered(&self, t: Seconds, enabled: impl Fn(&str) -> bool) -> SyncSnapshot {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, self.duration) };
        let matches = self
            .streams
            .iter()
            .filter(|(name, _)| enabled(name))
            .map(|(name, ts)| {
                let index = nearest_index(ts, t).expect("streams are non-empty");
                StreamMatch {
                    stream: name.clone(),
                    index,
                    timestamp: ts[index],
                }
            })
            .collect();
        SyncSnapshot { t, matches }
    }

    pub fn snapshot(&self, t: Seconds) -> SyncSnapshot {
        self.snapshot_filtered(t, |_| true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Speed {
    Fast,
    Slow,
}

/// The two navigation step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavSteps {
    pub fast: Seconds,
    pub slow: Seconds,
}

impl Default for NavSteps {
    fn default() -> Self {
        Self { fast: 1.0, slow: 0.033 }
    }
}

/// Moves the playhead by one navigation step, clamped to `[0, duration]`.
pub fn step(t: Seconds, direction: Direction, speed: Speed, steps: NavSteps, duration: Seconds) -> Seconds {
    let size = match speed {
        Speed::Fast => steps.fast,
        Speed::Slow => steps.slow,
    };
    let delta = match direction {
        Direction::Forward => size,
        Direction::Backward => -size,
    };
    (t + delta).clamp(0.0, duration)
}

/// Plot-ready samples of one channel dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimSeries {
    pub label: String,
    pub t: Vec<Seconds>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesWindow {
    pub channel: String,
    pub dims: usize,
    pub from: Seconds,
    pub to: Seconds,
    pub downsampled: bool,
    pub series: Vec<DimSeries>,
}

/// Samples of `channel` inside `[from, to]`, reduced to at most `max_points`
/// per dimension.
///
/// When the window holds more samples than `max_points`, it is split into
/// `max_points / 2` equal-count buckets and each bucket keeps its minimum and
/// maximum sample in time order, so peaks survive decimation. NaN samples
/// never win a bucket unless the whole bucket is NaN.
pub fn downsample_window(channel: &TimeSeriesChannel, from: Seconds, to: Seconds, max_points: usize) -> Result<SeriesWindow, SyncError> {
    if !(from < to) || max_points < 2 {
        return Err(SyncError::InvalidWindow { from, to, max_points });
    }
    let lo = channel.timestamps.partition_point(|&x| x < from);
    let hi = channel.timestamps.partition_point(|&x| x <= to);
    let count = hi.saturating_sub(lo);
    let dims = channel.dims();
    let downsampled = count > max_points;

    let series = (0..dims)
        .map(|d| {
            let value = |i: usize| channel.values[i * dims + d];
            let picked: Vec<usize> = if downsampled {
                minmax_indices(lo, hi, max_points / 2, value)
            } else {
                (lo..hi).collect()
            };
            DimSeries {
                label: channel.dim_labels[d].clone(),
                t: picked.iter().map(|&i| channel.timestamps[i]).collect(),
                v: picked.iter().map(|&i| value(i)).collect(),
            }
        })
        .collect();

    Ok(SeriesWindow {
        channel: channel.name.clone(),
        dims,
        from,
        to,
        downsampled,
        series,
    })
}

fn minmax_indices(lo: usize, hi: usize, buckets: usize, value: impl Fn(usize) -> f64) -> Vec<usize> {
    let count = hi - lo;
    let buckets = buckets.clamp(1, count);
    let mut out = Vec::with_capacity(buckets * 2);
    for b in 0..buckets {
        let start = lo + b * count / buckets;
        let end = lo + (b + 1) * count / buckets;
        let mut min_i = None::<usize>;
        let mut max_i = None::<usize>;
        for i in start..end {
            let v = value(i);
            if v.is_nan() {
                continue;
            }
            if min_i.is_none_or(|m| v < value(m)) {
                min_i = Some(i);
            }
            if max_i.is_none_or(|m| v > value(m)) {
                max_i = Some(i);
            }
        }
        match (min_i, max_i) {
            (Some(a), Some(b)) if a == b => out.push(a),
            (Some(a), Some(b)) => {
                out.push(a.min(b));
                out.push(a.max(b));
            }
            _ => out.push(start),
        }
    }
    out
}
