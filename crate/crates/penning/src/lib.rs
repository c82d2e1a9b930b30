//! Std companion of `penning-core`: file formats, spectra, resonance
//! search, parallel scans and the `penning` command line.

pub mod cli;
pub mod config;
pub mod csvout;
pub mod error;
pub mod gridfile;
pub mod resonance;
pub mod scenario;
pub mod spectrum;

pub use error::{AppError, AppResult};
