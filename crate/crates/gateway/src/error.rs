use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use seglab_core::annotation::{FileError, SessionError};
use seglab_formats::FormatError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{message}")]
    Unprocessable { message: String, path: Option<String> },
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let message = self.to_string();
        let path = match &self {
            ApiError::Unprocessable { path, .. } => path.as_deref(),
            _ => None,
        };
        (status, Json(Body { error: &message, path })).into_response()
    }
}

impl From<FormatError> for ApiError {
    fn from(e: FormatError) -> Self {
        match e {
            e if e.is_not_found() => ApiError::NotFound(e.to_string()),
            FormatError::OutOfRange(m) => ApiError::BadRequest(m),
            e => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<FileError> for ApiError {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Schema { path, message } => ApiError::Unprocessable {
                message: format!("schema violation at {path}: {message}"),
                path: Some(path),
            },
            FileError::Segment { episode: _, index, message } => ApiError::Unprocessable {
                message: format!("segment {index}: {message}"),
                path: Some(format!("segments[{index}]")),
            },
            FileError::Version(_) => ApiError::Unprocessable {
                message: e.to_string(),
                path: Some("version".into()),
            },
            FileError::Io { .. } => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let path = match &e {
            SessionError::Overlap { index, .. } => Some(format!("segments[{index}]")),
            _ => Some("segments".into()),
        };
        ApiError::Unprocessable { message: e.to_string(), path }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

/// Failure to start serving a dataset.
#[derive(Debug, Error)]
pub enum OpenError {
    #[error("annotation file: {0}")]
    Annotations(#[from] FileError),
    #[error("dataset: {0}")]
    Dataset(#[from] FormatError),
}
