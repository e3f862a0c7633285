//! Embedding providers selectable from the command line.

use std::path::PathBuf;

use degbench_core::embed::{random_embed, stub_embed, Embedding, EmbeddingStore, ImageKey};
use degbench_core::ImageBuf;
use serde::{Deserialize, Serialize};

use crate::remote::{RemoteClient, RemoteConfig};
use crate::store::load_store;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderConfig {
    /// Deterministic 64-d pixel embedding.
    Stub,
    /// Image-independent unit vectors keyed by image key and seed.
    Random { dim: usize, seed: u64 },
    /// Precomputed embeddings looked up by key.
    Store { path: PathBuf },
    Remote(RemoteConfig),
}

pub enum Provider {
    Stub,
    Random { dim: usize, seed: u64 },
    Store(EmbeddingStore),
    Remote(RemoteClient),
}

impl Provider {
    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        Ok(match config {
            ProviderConfig::Stub => Provider::Stub,
            ProviderConfig::Random { dim, seed } => Provider::Random {
                dim: *dim,
                seed: *seed,
            },
            ProviderConfig::Store { path } => Provider::Store(load_store(path)?),
            ProviderConfig::Remote(rc) => Provider::Remote(RemoteClient::from_env(rc.clone())),
        })
    }

    /// Whether [`Provider::embed`] looks at the image at all.
    pub fn needs_pixels(&self) -> bool {
        matches!(self, Provider::Stub | Provider::Remote(_))
    }

    /// Embeds the image identified by `key`; `image` is only called by
    /// providers that need pixels.
    pub fn embed(&self, key: &ImageKey, image: &dyn Fn() -> Result<ImageBuf>) -> Result<Embedding> {
        Ok(match self {
            Provider::Stub => stub_embed(&image()?)?,
            Provider::Random { dim, seed } => random_embed(key, *dim, *seed)?,
            Provider::Store(s) => s.get(key)?.clone(),
            Provider::Remote(c) => c.embed(&image()?)?,
        })
    }
}
