//! File formats, parallel fan-out and the `vmt` command line over the
//! `vmt-core` kernels.

pub mod anno;
pub mod cli;
pub mod dump;
pub mod error;
pub mod json;
pub mod overlay;
pub mod parallel;
pub mod report;
pub mod weights;

pub use error::{Error, Result};
