//! Binary embedding store.
//!
//! ```text
//! header  magic "DGBEMBED" | version u32 | dim u32 | count u64
//! record  key_len u32 | key bytes (UTF-8) | dim x f32
//! ```
//! All integers and floats little-endian; records in key order.

use std::fs;
use std::path::Path;

use degbench_core::embed::{Embedding, EmbeddingStore, ImageKey};

use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DGBEMBED";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("not an embedding store (bad magic)")]
    BadMagic,
    #[error("store version {found} is not supported (expected {VERSION})")]
    Version { found: u32 },
    #[error("store header truncated")]
    TruncatedHeader,
    #[error("store truncated in record {record}")]
    Truncated { record: u64 },
    #[error("record {record}: {reason}")]
    BadRecord { record: u64, reason: String },
    #[error("{0} trailing bytes after the last record")]
    Trailing(usize),
}

pub fn encode_store(store: &EmbeddingStore) -> Vec<u8> {
    let dim = store.dim().unwrap_or(0);
    let mut out = Vec::with_capacity(HEADER_LEN + store.len() * (16 + 4 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for (key, e) in store.iter() {
        let k = key.to_string();
        out.extend_from_slice(&(k.len() as u32).to_le_bytes());
        out.extend_from_slice(k.as_bytes());
        for v in e.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len())?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode_store(bytes: &[u8]) -> Result<EmbeddingStore, StoreError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(8).ok_or(StoreError::TruncatedHeader)?;
    if magic != MAGIC {
        return Err(StoreError::BadMagic);
    }
    let version = r.u32().ok_or(StoreError::TruncatedHeader)?;
    if version != VERSION {
        return Err(StoreError::Version { found: version });
    }
    let dim = r.u32().ok_or(StoreError::TruncatedHeader)? as usize;
    let count = r
        .take(8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or(StoreError::TruncatedHeader)?;
    if dim == 0 && count > 0 {
        return Err(StoreError::BadRecord {
            record: 0,
            reason: "zero dimension".into(),
        });
    }
    let mut store = if dim == 0 {
        EmbeddingStore::new()
    } else {
        EmbeddingStore::with_dim(dim)
    };
    for record in 0..count {
        let truncated = StoreError::Truncated { record };
        let bad = |reason: String| StoreError::BadRecord { record, reason };
        let klen = r.u32().ok_or(truncated.clone())? as usize;
        let kbytes = r.take(klen).ok_or(truncated.clone())?;
        let ktext = std::str::from_utf8(kbytes).map_err(|_| bad("key is not UTF-8".into()))?;
        let key = ImageKey::parse(ktext).map_err(|e| bad(e.to_string()))?;
        let raw = r.take(4 * dim).ok_or(truncated)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let e = Embedding::from_normalized(values).map_err(|e| bad(e.to_string()))?;
        if store.contains(&key) {
            return Err(bad(format!("duplicate key `{key}`")));
        }
        store.insert(key, e).map_err(|e| bad(e.to_string()))?;
    }
    if r.pos != bytes.len() {
        return Err(StoreError::Trailing(bytes.len() - r.pos));
    }
    Ok(store)
}

pub fn load_store(path: &Path) -> Result<EmbeddingStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_store(&bytes).map_err(|source| Error::Store {
        path: path.to_owned(),
        source,
    })
}

/// Writes via a temporary file and rename, so readers never see a partial
/// store.
pub fn save_store(path: &Path, store: &EmbeddingStore) -> Result<()> {
    write_atomic(path, &encode_store(store))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
