//! Dataset adapters. Each on-disk format is turned into the same
//! [`seglab_core::model::Episode`] shape; [`Dataset`] picks the adapter,
//! builds a lightweight index and loads episodes on demand.

pub mod dataset;
pub mod detect;
mod error;
pub mod frame;
pub mod io;
pub mod media;
pub mod reassemble;
pub mod rlds;
pub mod rosbag;

pub use dataset::{detect_format, frame_index_at, Dataset, DatasetBackend, EpisodeLocator, EpisodeSummary, IndexEntry, Registration, Registry};
pub use error::{FormatError, Result};
pub use frame::{Frame, FrameKind};
pub use io::IoStats;
