//! Kernels for high-quality video instance segmentation evaluation and
//! annotation self-correction.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel fan-out
//! and the command line live in the companion `vmt` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod incoherence;
pub mod mask;
pub mod metrics;
pub mod refine;
pub mod seed;
pub mod selfcorrect;

pub use error::{Error, Result};
