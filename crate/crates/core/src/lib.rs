//! Attenuated X-ray transform of symmetric 2-tensor fields on a disk.
//!
//! The crate computes forward data by ray quadrature, tests boundary data
//! against the A-analytic range conditions, and reconstructs the family of
//! tensors consistent with given data.

pub mod aanalytic;
pub mod attenuation;
pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod modes;
pub mod reconstruct;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
