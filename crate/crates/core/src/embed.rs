//! Unit-norm face embeddings, the keyed store that caches them, and two
//! in-process providers: a deterministic pixel stub and a seeded random one.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::image::{resize_bicubic, to_float, to_gray, ImageBuf};
use crate::{seed, Error, Result};

pub const STUB_DIM: usize = 64;
const STUB_SIDE: usize = 8;

/// An L2-normalized feature vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// Normalizes `values` (in f64) to unit length.
    pub fn from_raw(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateEmbedding);
        }
        let norm = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>());
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(Self {
            values: values.iter().map(|v| (v / norm) as f32).collect(),
        })
    }

    pub fn from_f32(values: &[f32]) -> Result<Self> {
        let wide: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        Self::from_raw(&wide)
    }

    /// Wraps values that are already unit length (e.g. read back from a
    /// store) without renormalizing, so they round-trip bit-exactly.
    pub fn from_normalized(values: Vec<f32>) -> Result<Self> {
        let e = Self { values };
        let n = e.norm();
        if e.values.is_empty() || !n.is_finite() || (n - 1.0).abs() > 1e-5 {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(e)
    }

    /// Unit vector along axis `i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut values = alloc::vec![0.0; dim];
        values[i] = 1.0;
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
    }

    /// Cosine similarity, computed in f64.
    pub fn cosine(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f64::from(a) * f64::from(b))
            .sum();
        Ok(dot / (self.norm() * other.norm()))
    }
}

/// Identifies one embedding: an image either clean or as degraded by a given
/// combination and repeat.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImageKey {
    Clean(String),
    Degraded {
        id: String,
        combination: u64,
        repeat: u32,
    },
}

impl ImageKey {
    pub fn clean(id: impl Into<String>) -> Self {
        Self::Clean(id.into())
    }

    pub fn degraded(id: impl Into<String>, combination: u64, repeat: u32) -> Self {
        Self::Degraded {
            id: id.into(),
            combination,
            repeat,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Self::Clean(id) | Self::Degraded { id, .. } => id,
        }
    }

    /// Parses the string form produced by `Display`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParam(format!("malformed image key `{s}`"));
        let (id, tag) = s.rsplit_once('@').ok_or_else(bad)?;
        if id.is_empty() {
            return Err(bad());
        }
        if tag == "clean" {
            return Ok(Self::clean(id));
        }
        let rest = tag.strip_prefix('c').ok_or_else(bad)?;
        let (c, r) = rest.split_once('r').ok_or_else(bad)?;
        Ok(Self::degraded(
            id,
            c.parse().map_err(|_| bad())?,
            r.parse().map_err(|_| bad())?,
        ))
    }
}

impl fmt::Display for ImageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Clean(id) => write!(f, "{id}@clean"),
            Self::Degraded {
                id,
                combination,
                repeat,
            } => write!(f, "{id}@c{combination}r{repeat}"),
        }
    }
}

/// Read access to embeddings by key.
pub trait EmbeddingLookup {
    fn lookup(&self, key: &ImageKey) -> Result<&Embedding>;
}

/// Embeddings keyed by [`ImageKey`], all of one dimension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: Option<usize>,
    entries: BTreeMap<ImageKey, Embedding>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim: Some(dim),
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces; the first insertion fixes the store dimension.
    pub fn insert(&mut self, key: ImageKey, e: Embedding) -> Result<()> {
        match self.dim {
            Some(d) if d != e.dim() => {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: e.dim(),
                })
            }
            None => self.dim = Some(e.dim()),
            _ => {}
        }
        self.entries.insert(key, e);
        Ok(())
    }

    pub fn get(&self, key: &ImageKey) -> Result<&Embedding> {
        self.entries
            .get(key)
            .ok_or_else(|| Error::MissingEmbedding(format!("{key}")))
    }

    pub fn contains(&self, key: &ImageKey) -> bool {
        self.entries.contains_key(key)
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&ImageKey, &Embedding)> {
        self.entries.iter()
    }

    /// Moves every entry of `other` into `self`.
    pub fn merge(&mut self, other: EmbeddingStore) -> Result<()> {
        for (k, e) in other.entries {
            self.insert(k, e)?;
        }
        Ok(())
    }
}

impl EmbeddingLookup for EmbeddingStore {
    fn lookup(&self, key: &ImageKey) -> Result<&Embedding> {
        self.get(key)
    }
}

/// Looks keys up in `first`, then in `second`.
pub struct Layered<'a, A: ?Sized, B: ?Sized> {
    pub first: &'a A,
    pub second: &'a B,
}

impl<A: EmbeddingLookup + ?Sized, B: EmbeddingLookup + ?Sized> EmbeddingLookup
    for Layered<'_, A, B>
{
    fn lookup(&self, key: &ImageKey) -> Result<&Embedding> {
        self.first.lookup(key).or_else(|_| self.second.lookup(key))
    }
}

/// Deterministic pixel embedding: luma, bicubic to 8x8, mean-subtracted and
/// normalized. A constant image maps to the first basis vector.
pub fn stub_embed(img: &ImageBuf) -> Result<Embedding> {
    let gray = to_gray(&to_float(img));
    let small = resize_bicubic(&gray, STUB_SIDE, STUB_SIDE)?;
    let v = small.data();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
    // Rounding residue of a flat image is treated as flat.
    if centered.iter().all(|x| x.abs() < 1e-9) {
        return Ok(Embedding::basis(STUB_DIM, 0));
    }
    Embedding::from_raw(&centered)
}

/// Pseudo-random unit vector fixed by `(key, seed)`; carries no image
/// information, so verification with it sits at chance level.
pub fn random_embed(key: &ImageKey, dim: usize, seed: u64) -> Result<Embedding> {
    if dim == 0 {
        return Err(Error::DegenerateEmbedding);
    }
    let s = seed::splitmix64(seed ^ seed::fnv1a64(format!("{key}").as_bytes()));
    let mut rng = seed::rng(s);
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    Embedding::from_raw(&v)
}
