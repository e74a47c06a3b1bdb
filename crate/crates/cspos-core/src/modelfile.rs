//! Versioned JSON envelopes for trained models on disk.

use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("model file {path}: expected kind {expected:?}, found {found:?}")]
    WrongKind {
        path: String,
        expected: String,
        found: String,
    },
    #[error("model file {path}: unsupported version {found} (this build reads {supported})")]
    WrongVersion {
        path: String,
        found: u32,
        supported: u32,
    },
    #[error("model file {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    model: T,
}

/// Serializes a model under a `{format, version, model}` envelope. Output
/// is deterministic for deterministic `T` serializations.
pub fn save<T: Serialize>(path: impl AsRef<Path>, kind: &str, model: &T) -> Result<(), ModelFileError> {
    let path = path.as_ref();
    let envelope = Envelope {
        format: kind.to_string(),
        version: FORMAT_VERSION,
        model,
    };
    let json = serde_json::to_string(&envelope).map_err(|source| ModelFileError::Json {
        path: path.to_string_lossy().into_owned(),
        source,
    })?;
    fs::write(path, json)?;
    Ok(())
}

/// Loads a model, checking the envelope kind and version.
pub fn load<T: DeserializeOwned>(path: impl AsRef<Path>, kind: &str) -> Result<T, ModelFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let envelope: Envelope<T> =
        serde_json::from_str(&text).map_err(|source| ModelFileError::Json {
            path: path.to_string_lossy().into_owned(),
            source,
        })?;
    if envelope.format != kind {
        return Err(ModelFileError::WrongKind {
            path: path.to_string_lossy().into_owned(),
            expected: kind.to_string(),
            found: envelope.format,
        });
    }
    if envelope.version != FORMAT_VERSION {
        return Err(ModelFileError::WrongVersion {
            path: path.to_string_lossy().into_owned(),
            found: envelope.version,
            supported: FORMAT_VERSION,
        });
    }
    Ok(envelope.model)
}
