//! Core of the specificity-optimized captioning pipeline.
//!
//! Everything in this crate is pure computation over in-memory values: a
//! small reverse-mode autodiff engine, the synthetic multimodal world, the
//! two-LSTM attention captioner, the frozen caption/image retriever with its
//! similarity losses, the training loops, and the caption metrics. File
//! formats, checkpoints on disk and the command line live in the `specap`
//! companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod captioner;
mod error;
pub mod hash;
pub mod math;
pub mod metrics;
pub mod optim;
pub mod retriever;
pub mod synthworld;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
