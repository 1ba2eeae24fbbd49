//! Local HTTP service and command-line tools over a dataset and its
//! annotation file.

pub mod api;
pub mod commands;
pub mod error;
pub mod store;

pub use api::{router, router_with_ui, AppState};
pub use error::{ApiError, OpenError};
