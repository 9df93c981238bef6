//! Permutation symmetries of neural-network loss landscapes.
//!
//! * [`combinatorics`]: exact counts of global-minima and critical subspaces.
//! * [`network`]: bias-free dense networks, loss, gradients and Hessians.
//! * [`expansion`]: expansion manifolds, critical expansions and connecting paths.
//! * [`verification`]: numerical certificates (criticality, spectra, flows).
//! * [`experiments`]: teacher-student training and neuron classification.

pub mod combinatorics;
pub mod error;
pub mod expansion;
pub mod experiments;
pub mod network;
pub mod verification;

pub use error::{Error, Result};
