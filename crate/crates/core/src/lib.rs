//! Least-squares (LS) and back-projection (BP) fidelity terms for ill-posed
//! linear inverse problems `y = Ax + e`.
//!
//! The crate is organised bottom-up:
//!
//! * [`linops`]: forward operators, adjoints, pseudo-inverse, spectra.
//! * [`fidelity`]: the two data terms with values, gradients and step sizes.
//! * [`tikhonov`]: closed-form estimators under l2 priors and their
//!   analytic bias/variance predictions.
//! * [`priors`]: proximal mappings (l2, isotropic TV, plug-in denoisers).
//! * [`solvers`]: conjugate gradients, ISTA/FISTA and IDBP.
//! * [`harness`]: scenarios, noise, metrics and beta sweeps.

pub mod error;
pub mod fidelity;
pub mod harness;
pub mod linops;
pub mod priors;
pub mod solvers;
pub mod tikhonov;

pub use error::{Error, Result};
pub use fidelity::{FidelityKind, FidelityTerm};
pub use linops::{LinearOperator, PseudoInverse, Shape, Signal, SpectralDecomposition};

/// Dense real vector used for signals and observations alike.
pub type Vector = nalgebra::DVector<f64>;
