use std::path::PathBuf;

use seglab_core::config::DatasetFormat;
use seglab_core::model::ModelError;
use thiserror::Error;

use crate::rlds::example::ExampleError;
use crate::rlds::tfrecord::TfRecordError;
use crate::rosbag::decode::DecodeError;
use crate::rosbag::BagError;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config declares {expected} but {} looks like {found}", path.display())]
    FormatMismatch {
        expected: DatasetFormat,
        found: DatasetFormat,
        path: PathBuf,
    },
    #[error("no adapter registered for {0}")]
    NoAdapter(DatasetFormat),
    #[error("unknown episode {0:?}")]
    UnknownEpisode(String),
    #[error("episode has no stream named {0:?}")]
    UnknownStream(String),
    #[error("{0}")]
    Config(String),
    #[error("{context}: {message}")]
    Decode { context: String, message: String },
    #[error("{0}")]
    OutOfRange(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bag(#[from] BagError),
    #[error(transparent)]
    Message(#[from] DecodeError),
    #[error(transparent)]
    TfRecord(#[from] TfRecordError),
    #[error(transparent)]
    Example(#[from] ExampleError),
    #[error("hdf5 {}: {message}", path.display())]
    Hdf5 { path: PathBuf, message: String },
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

impl FormatError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn decode(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        FormatError::Decode {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// True for errors the HTTP layer should report as "not found".
    pub fn is_not_found(&self) -> bool {
        matches!(self, FormatError::UnknownEpisode(_) | FormatError::UnknownStream(_))
    }
}
