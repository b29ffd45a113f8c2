//! File formats, Monte Carlo harness and command line for `geomatch-core`.

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod parallel;

pub use error::{Error, Result};
