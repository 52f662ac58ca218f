//! Pseudo-inverse `A_ε† = Aᵀ(AAᵀ + εI)⁻¹` and the row-space projector.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rustfft::num_complex::Complex64;

use super::{FourierDiagonal, LinearOperator, DENSE_LIMIT};
use crate::error::{check_len, Error, Result};
use crate::solvers::cg::conjugate_gradient;
use crate::Vector;

/// Iteration cap for the CG solve on `AAᵀ + εI`.
pub const CG_MAX_ITERS: usize = 500;
/// Relative residual tolerance for the CG solve on `AAᵀ + εI`.
pub const CG_TOL: f64 = 1e-10;

/// Largest `m` for which [`PinvStrategy::Auto`] factors `AAᵀ + εI` densely.
const DENSE_GRAM_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinvStrategy {
    /// Row-orthonormal shortcut, then Fourier, then dense Cholesky, then CG.
    Auto,
    /// CG on the `m x m` system, matrix-free.
    Iterative,
    /// Per-frequency division; only for circulant operators.
    Fourier,
    /// Cholesky factor of the materialised Gram matrix, computed once.
    Dense,
}

enum Backend {
    RowOrthonormal,
    Fourier { diag: FourierDiagonal, inverse: Vec<Complex64> },
    Dense { chol: Cholesky<f64, Dyn> },
    Iterative,
}

/// A prepared (possibly factored) loaded pseudo-inverse of an operator.
#[derive(Clone)]
pub struct PseudoInverse {
    op: Arc<LinearOperator>,
    eps: f64,
    backend: Arc<Backend>,
}

impl std::fmt::Debug for PseudoInverse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let backend = match *self.backend {
            Backend::RowOrthonormal => "row-orthonormal",
            Backend::Fourier { .. } => "fourier",
            Backend::Dense { .. } => "dense",
            Backend::Iterative => "cg",
        };
        f.debug_struct("PseudoInverse")
            .field("op", &self.op.name())
            .field("eps", &self.eps)
            .field("backend", &backend)
            .finish()
    }
}

impl PseudoInverse {
    pub fn new(op: Arc<LinearOperator>, eps: f64) -> Result<Self> {
        Self::with_strategy(op, eps, PinvStrategy::Auto)
    }

    pub fn with_strategy(op: Arc<LinearOperator>, eps: f64, strategy: PinvStrategy) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("loading eps must be finite and >= 0, got {eps}")));
        }
        let backend = match strategy {
            PinvStrategy::Auto => {
                if op.has_orthonormal_rows() {
                    Backend::RowOrthonormal
                } else if let Some(diag) = op.fourier_diagonal() {
                    fourier_backend(diag, eps)?
                } else {
                    let (m, n) = op.dims();
                    if n <= DENSE_LIMIT && m <= DENSE_GRAM_LIMIT {
                        dense_backend(&op, eps)?
                    } else {
                        Backend::Iterative
                    }
                }
            }
            PinvStrategy::Iterative => Backend::Iterative,
            PinvStrategy::Fourier => {
                let diag = op.fourier_diagonal().ok_or_else(|| {
                    Error::InvalidArgument(format!("operator {} is not circulant", op.name()))
                })?;
                fourier_backend(diag, eps)?
            }
            PinvStrategy::Dense => dense_backend(&op, eps)?,
        };
        Ok(Self { op, eps, backend: Arc::new(backend) })
    }

    pub fn op(&self) -> &Arc<LinearOperator> {
        &self.op
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Same operator and backend choice with a different loading.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let strategy = match *self.backend {
            Backend::Iterative => PinvStrategy::Iterative,
            Backend::Dense { .. } => PinvStrategy::Dense,
            Backend::Fourier { .. } => PinvStrategy::Fourier,
            Backend::RowOrthonormal => PinvStrategy::Auto,
        };
        Self::with_strategy(self.op.clone(), eps, strategy)
    }

    /// `Aᵀ(AAᵀ + εI)⁻¹ v`.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        let (m, _) = self.op.dims();
        check_len(m, v.len())?;
        match &*self.backend {
            Backend::RowOrthonormal => Ok(self.op.adjoint(v)? / (1.0 + self.eps)),
            Backend::Fourier { diag, inverse } => Ok(Vector::from_vec(diag.fft.filter(v.as_slice(), inverse))),
            Backend::Dense { chol } => self.op.adjoint(&chol.solve(v)),
            Backend::Iterative => self.op.adjoint(&iterative_gram_solve(&self.op, v, self.eps)?),
        }
    }

    /// `(AAᵀ + εI)⁻¹ v`.
    pub fn gram_solve(&self, v: &Vector) -> Result<Vector> {
        let (m, _) = self.op.dims();
        check_len(m, v.len())?;
        match &*self.backend {
            Backend::RowOrthonormal => Ok(v / (1.0 + self.eps)),
            Backend::Fourier { diag, .. } => {
                let inverse: Vec<f64> = diag.symbol.iter().map(|h| 1.0 / (h.norm_sqr() + self.eps)).collect();
                Ok(Vector::from_vec(diag.fft.filter_real(v.as_slice(), &inverse)))
            }
            Backend::Dense { chol } => Ok(chol.solve(v)),
            Backend::Iterative => iterative_gram_solve(&self.op, v, self.eps),
        }
    }

    /// `A_ε† A x`; the orthogonal row-space projector when `ε = 0`.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.apply(&self.op.apply(x)?)
    }
}

fn fourier_backend(diag: FourierDiagonal, eps: f64) -> Result<Backend> {
    let mut inverse = Vec::with_capacity(diag.symbol.len());
    for h in &diag.symbol {
        let power = h.norm_sqr() + eps;
        if power <= 0.0 {
            return Err(Error::RankDeficient(h.norm()));
        }
        inverse.push(h.conj() / power);
    }
    Ok(Backend::Fourier { diag, inverse })
}

fn dense_backend(op: &LinearOperator, eps: f64) -> Result<Backend> {
    let a = op.materialize()?;
    let m = a.nrows();
    let gram = &a * a.transpose() + DMatrix::identity(m, m) * eps;
    let chol = Cholesky::new(gram).ok_or(Error::RankDeficient(0.0))?;
    Ok(Backend::Dense { chol })
}

fn iterative_gram_solve(op: &LinearOperator, v: &Vector, eps: f64) -> Result<Vector> {
    let gram = |w: &Vector| -> Result<Vector> {
        let mut out = op.apply(&op.adjoint(w)?)?;
        if eps > 0.0 {
            out.axpy(eps, w, 1.0);
        }
        Ok(out)
    };
    let outcome = conjugate_gradient(gram, v, &Vector::zeros(v.len()), CG_MAX_ITERS, CG_TOL)?;
    if !outcome.converged {
        return Err(Error::Convergence {
            iterations: outcome.iterations,
            residual: outcome.residuals.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(outcome.solution)
}

impl LinearOperator {
    /// `Aᵀ(AAᵀ + εI)⁻¹ v` by per-frequency division for circulant operators
    /// and by matrix-free CG otherwise.
    pub fn pseudo_inverse_apply(&self, v: &Vector, eps: f64) -> Result<Vector> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("loading eps must be >= 0, got {eps}")));
        }
        let (m, _) = self.dims();
        check_len(m, v.len())?;
        match self.fourier_diagonal() {
            Some(diag) => match fourier_backend(diag, eps)? {
                Backend::Fourier { diag, inverse } => Ok(Vector::from_vec(diag.fft.filter(v.as_slice(), &inverse))),
                _ => unreachable!(),
            },
            None => self.adjoint(&iterative_gram_solve(self, v, eps)?),
        }
    }

    /// `A†A x`, the projection onto the row space of `A` (loaded when `ε > 0`).
    pub fn project_rowspace(&self, x: &Vector, eps: f64) -> Result<Vector> {
        self.pseudo_inverse_apply(&self.apply(x)?, eps)
    }
}
