//! Simulation and verification toolkit for two-party correlation estimation
//! under a communication budget.
//!
//! Alice and Bob hold the two columns of iid ρ-correlated pairs (binary ±1
//! or unit Gaussian) and exchange `k` bits so that Bob can estimate ρ. The
//! crate is organised as:
//!
//! - [`model`]: pair generation, the common-randomness correlation shift and
//!   the block-sum binary→Gaussian preprocessor.
//! - [`info`]: exact finite-alphabet entropy, divergence and mutual
//!   information, finite-difference Fisher information, Bayesian
//!   Cramér–Rao machinery and closed-form risk references.
//! - [`protocols`]: transcripts with bit accounting, the naive, max-index,
//!   side-information, Hamming-block and two-phase schemes, extreme-value
//!   quadrature and the Monte Carlo risk estimator.
//! - [`sdpi`]: brute-force checks of the symmetric strong data-processing
//!   inequality and the interactive divergence chain on small instances.

pub mod error;
pub mod info;
pub mod model;
pub mod numeric;
pub mod protocols;
pub mod rng;
pub mod sdpi;

pub use error::{Error, Result};
