//! Core of the degradation benchmark: raster primitives, the five degradation
//! operators and their composition, the parameter-grid sweep plan, embedding
//! math and the LFW-style verification protocol.
//!
//! Everything here is a pure function of its inputs. The crate is `no_std`
//! and only needs `alloc`; file formats, networking and orchestration live in
//! the `degbench` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod degrade;
pub mod embed;
mod error;
pub mod image;
pub mod seed;
pub mod sweep;
pub mod verify;

pub use degrade::{degrade, DegradationParams, KernelParams};
pub use embed::{Embedding, EmbeddingStore, ImageKey};
pub use error::Error;
pub use image::{FloatPlane, ImageBuf};
pub use sweep::{ParamGrid, SweepManifest};
pub use verify::{Mode, PairSet, RunResult, ThresholdSet};

pub type Result<T, E = Error> = core::result::Result<T, E>;
