//! Manifest and other JSON artifacts, plus the content hashes that tie them
//! together.

use std::fs;
use std::path::Path;

use degbench_core::SweepManifest;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::store::write_atomic;
use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Compact JSON followed by a newline.
pub fn to_json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec(value).expect("serializable value");
    v.push(b'\n');
    v
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable value");
    v.push(b'\n');
    v
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_pretty(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}

pub fn manifest_bytes(m: &SweepManifest) -> Vec<u8> {
    to_json_line(m)
}

pub fn write_manifest(path: &Path, m: &SweepManifest) -> Result<String> {
    let bytes = manifest_bytes(m);
    write_atomic(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

/// Reads and validates a manifest; returns it with the SHA-256 of the file.
pub fn read_manifest(path: &Path) -> Result<(SweepManifest, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let m: SweepManifest = serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))?;
    m.validate()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok((m, sha256_hex(&bytes)))
}
