//! Field models, a finite-difference Laplace solver and Boris-pusher ion
//! dynamics for wire, two-plate and pad-electrode Penning traps.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, spectral analysis
//! and the command-line front end live in the `penning` crate.
#![no_std]
extern crate alloc;

pub mod analysis;
pub mod analytic;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod hop;
pub mod traps;
pub mod pads;
pub mod units;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use field::{FieldSource, Location};
pub use units::{species_from_amu, Species, TrajectoryState, Vec3};
