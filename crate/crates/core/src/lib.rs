//! Simulation and characterisation of multi-time quantum stochastic processes.
//!
//! The central object is the process tensor: the Choi state of a k-step
//! quantum process over 2k+1 legs, ordered latest-first
//! (o_k, i_k, o_{k-1}, ..., i_1, o_0). On top of it this crate provides
//! exact system-environment simulation, maximum-likelihood tomography,
//! property bounding over under-determined process families, restricted
//! temporal entanglement witnesses, classical-shadow estimation, and
//! temporal matrix-product-operator reconstruction.

pub mod basis;
pub mod bound;
pub mod channel;
pub mod dataset;
pub mod error;
pub mod gates;
pub mod layout;
pub mod linalg;
pub mod mat;
pub mod measures;
pub mod mle;
pub mod opt;
pub mod pauli;
pub mod process;
pub mod projection;
pub mod simulator;
pub mod witness;

pub use error::{Error, Result};
pub use mat::CMat;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
