//! Photon-pair spectro-temporal simulation for AlGaAs Bragg-reflection
//! waveguides: layer-stack mode solving, phasematching and group-index
//! analysis, joint spectral amplitudes, two-photon interference and
//! polarization-entanglement figures of merit.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curve;
pub mod dispersion;
pub mod entanglement;
pub mod error;
pub mod interference;
pub mod jsa;
pub mod material;
pub mod run;
pub mod solver;
pub mod stack;
pub mod units;

pub use error::{BrwError, Result};
