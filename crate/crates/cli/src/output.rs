use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// SHA-256 (hex) of the JSON serialization of `value`.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("hashed values serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of `body` with a top-level `config_hash` field added.
pub fn write_stamped_json<T: Serialize>(path: &Path, config_hash: &str, body: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&Stamped { config_hash, body })? + "\n";
    write_atomic(path, text.as_bytes())
}

/// The first-line comment carried by CSV outputs.
pub fn csv_comment(config_hash: &str) -> String {
    format!("config_hash={config_hash}")
}
