//! Annotation persistence behind the API: one file per dataset and
//! annotator, rewritten atomically on every accepted change.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use seglab_core::annotation::{AnnotationFile, AnnotationSession, EpisodeEntry, FileError, SessionError};
use seglab_core::model::Seconds;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug)]
pub struct AnnotationStore {
    path: PathBuf,
    file: Mutex<AnnotationFile>,
}

impl AnnotationStore {
    /// Loads `path` when it exists, otherwise starts an empty file.
    pub fn open(path: impl Into<PathBuf>, dataset: &str, annotator: &str) -> Result<Self, FileError> {
        let path = path.into();
        let file = if path.exists() {
            AnnotationFile::load(&path)?
        } else {
            AnnotationFile::new(dataset, annotator)
        };
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, episode: &str) -> Option<EpisodeEntry> {
        self.file.lock().unwrap().episodes.get(episode).cloned()
    }

    /// Replaces the annotations of `episode` after checking them against its
    /// duration and the label set. Nothing changes if the save fails.
    pub fn put(&self, episode: &str, entry: EpisodeEntry, duration: Seconds, labels: &[String]) -> Result<EpisodeEntry, StoreError> {
        let mut file = self.file.lock().unwrap();
        let mut session = AnnotationSession::new(episode, file.annotator.clone(), duration, labels.to_vec())
            .with_description(entry.description.clone());
        session.set_segments(entry.segments)?;
        let mut next = file.clone();
        next.upsert_session(&session);
        next.save(&self.path)?;
        *file = next;
        Ok(file.episodes[episode].clone())
    }

    pub fn snapshot(&self) -> AnnotationFile {
        self.file.lock().unwrap().clone()
    }
}
