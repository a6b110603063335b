//! Integer optimization on spin hardware with a candidate-anchored encoding.
//!
//! The crate turns Potts-style integer problems into Ising models two ways:
//! the usual indicator-per-value one-hot map, and an anchored map that
//! eliminates the indicator of a reference (candidate) value per variable, so
//! the all-up spin block means "keep the candidate value". The anchored form
//! needs one fewer spin per variable and makes a transverse-field annealer
//! sample the candidate's neighborhood with a controlled bias.
//!
//! On top of the encodings sit two analysis layers: exact diagonalization of
//! small transverse-field Hamiltonians (spectra, gaps, ground-state sampling
//! probabilities) and a self-consistent mean-field treatment of the fully
//! connected ferromagnet that locates first-order phase transitions and maps
//! out where they disappear.

pub mod encoding;
pub mod error;
pub mod exec;
pub mod meanfield;
pub mod potts;
pub mod qa;

pub use error::{Error, Result};
