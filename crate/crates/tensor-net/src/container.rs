//! Versioned, checksummed model container.
//!
//! Every persisted artifact (network, SVM, HHMM) uses the same envelope: a
//! self-describing JSON document carrying a format tag, an artifact kind, a
//! version number, and a SHA-256 checksum of the raw payload text. Loading
//! fails if any of these disagree. Writes go through a temp file followed by
//! a rename so readers never observe a partial artifact.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::error::{Result, TensorNetError};

const FORMAT: &str = "endoflow-container";

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    kind: &'a str,
    version: u32,
    checksum: String,
    payload: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    format: String,
    kind: String,
    version: u32,
    checksum: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

fn digest(payload: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(payload.as_bytes());
    hex::encode(hasher.finalize())
}

/// Serializes `value` into a container file at `path`.
pub fn save<T: Serialize>(path: &Path, kind: &str, version: u32, value: &T) -> Result<()> {
    let payload = serde_json::to_string(value)?;
    let raw = RawValue::from_string(payload.clone())?;
    let envelope = EnvelopeOut {
        format: FORMAT,
        kind,
        version,
        checksum: digest(&payload),
        payload: &raw,
    };
    let text = serde_json::to_string(&envelope)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a container file, verifying format, kind, version, and checksum.
pub fn load<T: DeserializeOwned>(path: &Path, kind: &str, version: u32) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let envelope: EnvelopeIn = serde_json::from_str(&text)?;
    if envelope.format != FORMAT {
        return Err(TensorNetError::ContainerFormat {
            expected: FORMAT.into(),
            found: envelope.format,
        });
    }
    if envelope.kind != kind {
        return Err(TensorNetError::ContainerKind {
            expected: kind.into(),
            found: envelope.kind,
        });
    }
    if envelope.version != version {
        return Err(TensorNetError::ContainerVersion {
            expected: version,
            found: envelope.version,
        });
    }
    let payload = envelope.payload.get();
    if digest(payload) != envelope.checksum {
        return Err(TensorNetError::ContainerChecksum {
            path: path.display().to_string(),
        });
    }
    Ok(serde_json::from_str(payload)?)
}

/// True if `path` holds a loadable artifact of the given kind and version
/// with an intact checksum. Used for crash-resume decisions.
pub fn is_valid(path: &Path, kind: &str, version: u32) -> bool {
    load::<serde_json::Value>(path, kind, version).is_ok()
}
