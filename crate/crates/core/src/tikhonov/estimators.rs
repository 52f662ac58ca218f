use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rustfft::num_complex::Complex64;

use super::L2Prior;
use crate::error::{check_len, Error, Result};
use crate::linops::{Fft2, LinearOperator, PseudoInverse};
use crate::solvers::cg::{conjugate_gradient, CgOutcome};
use crate::Vector;

/// Iteration cap for the closed-form CG path.
pub const CLOSED_CG_MAX_ITERS: usize = 2000;
/// Relative residual tolerance for the closed-form CG path.
pub const CLOSED_CG_TOL: f64 = 1e-10;
/// Largest `n` for which the normal matrix is formed and factored densely.
pub const DENSE_NORMAL_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    /// Fourier division when operator and prior are circulant on the same
    /// grid, an `m x m` solve for `D = I`, dense Cholesky for
    /// `n <= DENSE_NORMAL_LIMIT`, CG otherwise.
    Auto,
    Iterative,
}

#[derive(Debug, Clone)]
enum Data {
    LeastSquares(Arc<LinearOperator>),
    BackProjection(PseudoInverse),
}

enum Backend {
    Fourier { fft: Fft2, multiplier: Vec<Complex64> },
    /// `D = I`: the estimate is `scale · Aᵀ(AAᵀ + loading·I)⁻¹y`.
    RowSpace { pinv: PseudoInverse, scale: f64 },
    Dense(Cholesky<f64, Dyn>),
    Iterative,
}

/// Minimiser of `ℓ(x) + β·½‖Dx‖²` for one fidelity, prior and `β`:
/// `(AᵀA + βDᵀD)⁻¹Aᵀy` (LS) or `(P_A + βDᵀD)⁻¹A†y` (BP).
///
/// Factorisations are computed once so that repeated solves for
/// different observations are cheap.
pub struct TikhonovSolver {
    data: Data,
    beta: f64,
    prior: L2Prior,
    backend: Backend,
}

impl TikhonovSolver {
    pub fn least_squares(op: Arc<LinearOperator>, beta: f64, prior: L2Prior) -> Result<Self> {
        Self::new(Data::LeastSquares(op), beta, prior, SolvePath::Auto)
    }

    pub fn back_projection(pinv: PseudoInverse, beta: f64, prior: L2Prior) -> Result<Self> {
        Self::new(Data::BackProjection(pinv), beta, prior, SolvePath::Auto)
    }

    pub fn least_squares_with(op: Arc<LinearOperator>, beta: f64, prior: L2Prior, path: SolvePath) -> Result<Self> {
        Self::new(Data::LeastSquares(op), beta, prior, path)
    }

    pub fn back_projection_with(pinv: PseudoInverse, beta: f64, prior: L2Prior, path: SolvePath) -> Result<Self> {
        Self::new(Data::BackProjection(pinv), beta, prior, path)
    }

    fn new(data: Data, beta: f64, prior: L2Prior, path: SolvePath) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {beta}")));
        }
        let mut solver = Self { data, beta, prior, backend: Backend::Iterative };
        if path == SolvePath::Auto {
            solver.backend = solver.pick_backend()?;
        }
        Ok(solver)
    }

    fn op(&self) -> &LinearOperator {
        match &self.data {
            Data::LeastSquares(op) => op,
            Data::BackProjection(pinv) => pinv.op(),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prior(&self) -> &L2Prior {
        &self.prior
    }

    pub fn is_back_projection(&self) -> bool {
        matches!(self.data, Data::BackProjection(_))
    }

    fn pick_backend(&self) -> Result<Backend> {
        let op = self.op();
        if let Some(diag) = op.fourier_diagonal() {
            if let Some(g) = self.prior.fourier_symbol(diag.shape()) {
                let multiplier = diag
                    .symbol
                    .iter()
                    .zip(&g)
                    .map(|(h, g)| {
                        let power = h.norm_sqr();
                        let denom = match &self.data {
                            Data::LeastSquares(_) => power + self.beta * g,
                            Data::BackProjection(pinv) => power + self.beta * g * (power + pinv.eps()),
                        };
                        h.conj() / denom
                    })
                    .collect();
                return Ok(Backend::Fourier { fft: diag.fft, multiplier });
            }
        }
        if let L2Prior::Identity = self.prior {
            // LS: Aᵀ(AAᵀ+βI)⁻¹y. BP: with x = Aᵀz the normal equations reduce
            // to ((1+β)AAᵀ + βεI)z = y.
            let (loading, scale) = match &self.data {
                Data::LeastSquares(_) => (self.beta, 1.0),
                Data::BackProjection(pinv) => (self.beta * pinv.eps() / (1.0 + self.beta), 1.0 / (1.0 + self.beta)),
            };
            let op = match &self.data {
                Data::LeastSquares(op) => op.clone(),
                Data::BackProjection(pinv) => pinv.op().clone(),
            };
            return Ok(Backend::RowSpace { pinv: PseudoInverse::new(op, loading)?, scale });
        }
        let (_, n) = op.dims();
        if n <= DENSE_NORMAL_LIMIT {
            return self.dense_backend();
        }
        Ok(Backend::Iterative)
    }

    fn dense_backend(&self) -> Result<Backend> {
        let a = self.op().materialize()?;
        let (m, n) = a.shape();
        let data_term = match &self.data {
            Data::LeastSquares(_) => a.tr_mul(&a),
            Data::BackProjection(pinv) => {
                let gram = &a * a.transpose() + DMatrix::identity(m, m) * pinv.eps();
                let chol = Cholesky::new(gram).ok_or(Error::RankDeficient(0.0))?;
                a.tr_mul(&chol.solve(&a))
            }
        };
        let mut normal = data_term;
        match &self.prior {
            L2Prior::Identity => {
                for i in 0..n {
                    normal[(i, i)] += self.beta;
                }
            }
            L2Prior::DenseDtD(dtd) => {
                check_len(n, dtd.nrows())?;
                normal += dtd * self.beta;
            }
            prior => {
                for j in 0..n {
                    let mut e = Vector::zeros(n);
                    e[j] = 1.0;
                    let col = prior.apply_dtd(&e)?;
                    let mut target = normal.column_mut(j);
                    target.axpy(self.beta, &col, 1.0);
                }
                // Symmetrise rounding in the data term.
                normal = (&normal + normal.transpose()) * 0.5;
            }
        }
        let chol = Cholesky::new(normal).ok_or(Error::Numerical("normal matrix is not positive definite"))?;
        Ok(Backend::Dense(chol))
    }

    /// Right-hand side `Aᵀy` (LS) or `A†y` (BP).
    pub fn rhs(&self, y: &Vector) -> Result<Vector> {
        match &self.data {
            Data::LeastSquares(op) => op.adjoint(y),
            Data::BackProjection(pinv) => pinv.apply(y),
        }
    }

    /// Normal-equation map `(AᵀA + βDᵀD)x` or `(P_A + βDᵀD)x`.
    pub fn normal_apply(&self, x: &Vector) -> Result<Vector> {
        let mut out = match &self.data {
            Data::LeastSquares(op) => op.adjoint(&op.apply(x)?)?,
            Data::BackProjection(pinv) => pinv.project(x)?,
        };
        out.axpy(self.beta, &self.prior.apply_dtd(x)?, 1.0);
        Ok(out)
    }

    /// Runs CG on the normal equations from `x0` for at most `iters` steps.
    pub fn cg(&self, y: &Vector, x0: &Vector, iters: usize, tol: f64) -> Result<CgOutcome> {
        let b = self.rhs(y)?;
        conjugate_gradient(|x| self.normal_apply(x), &b, x0, iters, tol)
    }

    pub fn solve(&self, y: &Vector) -> Result<Vector> {
        let (m, n) = self.op().dims();
        check_len(m, y.len())?;
        match &self.backend {
            Backend::Fourier { fft, multiplier } => Ok(Vector::from_vec(fft.filter(y.as_slice(), multiplier))),
            Backend::RowSpace { pinv, scale } => Ok(pinv.apply(y)? * *scale),
            Backend::Dense(chol) => Ok(chol.solve(&self.rhs(y)?)),
            Backend::Iterative => {
                let outcome = self.cg(y, &Vector::zeros(n), CLOSED_CG_MAX_ITERS, CLOSED_CG_TOL)?;
                if !outcome.converged {
                    return Err(Error::Convergence {
                        iterations: outcome.iterations,
                        residual: outcome.residuals.last().copied().unwrap_or(f64::NAN),
                    });
                }
                Ok(outcome.solution)
            }
        }
    }
}

/// `x̂_LS = (AᵀA + βDᵀD)⁻¹Aᵀy`.
pub fn solve_ls_closed(op: &LinearOperator, y: &Vector, beta: f64, prior: &L2Prior) -> Result<Vector> {
    TikhonovSolver::least_squares(Arc::new(op.clone()), beta, prior.clone())?.solve(y)
}

/// `x̂_BP = (P_A + βDᵀD)⁻¹A†y` with the `ε`-loaded pseudo-inverse.
pub fn solve_bp_closed(op: &LinearOperator, y: &Vector, beta: f64, eps: f64, prior: &L2Prior) -> Result<Vector> {
    let pinv = PseudoInverse::new(Arc::new(op.clone()), eps)?;
    TikhonovSolver::back_projection(pinv, beta, prior.clone())?.solve(y)
}
