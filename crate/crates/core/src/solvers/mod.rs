//! Iterative solvers: conjugate gradients, ISTA/FISTA and IDBP.

pub mod cg;
mod idbp;
mod prox;

pub use cg::{conjugate_gradient, CgOutcome};
pub use idbp::{equivalence_check, idbp, idbp_with, IdbpConfig, DEFAULT_NOISELESS_DELTA};
pub use prox::{prox_gradient, prox_gradient_with, IterTrace, Momentum, ProxOutcome, ProxStepConfig, StepSize};
