//! File formats, embedding providers and the resumable sweep runner built on
//! top of `degbench-core`.

pub mod cli;
pub mod error;
pub mod imageio;
pub mod manifest;
pub mod pairs;
pub mod provider;
pub mod remote;
pub mod report;
pub mod run;
pub mod selftest;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
