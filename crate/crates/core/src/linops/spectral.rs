//! Singular value decompositions, power iteration and condition numbers.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Fft2, LinearOperator};
use crate::error::{check_len, Error, Result};
use crate::Vector;

/// Right singular basis `V` of `A = UΛVᵀ`.
#[derive(Debug, Clone)]
pub enum RightBasis {
    /// The `m` leading right singular vectors as columns of an `n x m`
    /// matrix. The remaining `n - m` columns of `V` span the null space of
    /// `A` and are handled implicitly through the orthogonal complement.
    Dense(DMatrix<f64>),
    /// Unitary DFT basis of a circulant operator; singular value `i` belongs
    /// to frequency `order[i]` (row-major index into the spectrum).
    Fourier { fft: Fft2, order: Vec<usize> },
    /// `V = I`, for synthetic spectra.
    Canonical,
}

/// `[Vᵀx]ᵢ²` for the `m` singular directions plus the null-space energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    pub lambda_sq: Vec<f64>,
    pub coeff_sq: Vec<f64>,
    /// `Σ_{i>m} [Vᵀx]ᵢ²`.
    pub null_energy: f64,
}

impl SpectralCoefficients {
    pub fn m(&self) -> usize {
        self.lambda_sq.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    singular_values: Vec<f64>,
    basis: RightBasis,
    left: Option<DMatrix<f64>>,
    n: usize,
}

impl SpectralDecomposition {
    /// Synthetic decomposition with `V = I`: `A = [diag(λ) 0]`.
    pub fn from_singular_values(mut singular_values: Vec<f64>, n: usize) -> Result<Self> {
        if singular_values.is_empty() || singular_values.len() > n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= m <= n singular values, got m = {} for n = {n}",
                singular_values.len()
            )));
        }
        if singular_values.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("singular values must be positive and finite".into()));
        }
        singular_values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { singular_values, basis: RightBasis::Canonical, left: None, n })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn lambda_sq(&self) -> Vec<f64> {
        self.singular_values.iter().map(|s| s * s).collect()
    }

    pub fn m(&self) -> usize {
        self.singular_values.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &RightBasis {
        &self.basis
    }

    /// Left singular vectors `U` (dense path only).
    pub fn left(&self) -> Option<&DMatrix<f64>> {
        self.left.as_ref()
    }

    pub fn coefficients(&self, x: &Vector) -> Result<SpectralCoefficients> {
        check_len(self.n, x.len())?;
        let m = self.m();
        let (coeff_sq, null_energy) = match &self.basis {
            RightBasis::Dense(v) => {
                let c = v.tr_mul(x);
                let residual = x - v * &c;
                (c.iter().map(|c| c * c).collect(), residual.norm_squared())
            }
            RightBasis::Fourier { fft, order } => {
                let spec = fft.forward_real(x.as_slice());
                let scale = 1.0 / self.n as f64;
                (order.iter().map(|&k| spec[k].norm_sqr() * scale).collect(), 0.0)
            }
            RightBasis::Canonical => {
                let coeff = x.iter().take(m).map(|c| c * c).collect();
                (coeff, x.iter().skip(m).map(|c| c * c).sum())
            }
        };
        Ok(SpectralCoefficients { lambda_sq: self.lambda_sq(), coeff_sq, null_energy })
    }

    /// Real coefficients `[Vᵀx]ᵢ`, `i < m`; not available for the complex DFT basis.
    pub fn real_coefficients(&self, x: &Vector) -> Result<Vector> {
        check_len(self.n, x.len())?;
        match &self.basis {
            RightBasis::Dense(v) => Ok(v.tr_mul(x)),
            RightBasis::Canonical => Ok(x.rows(0, self.m()).into_owned()),
            RightBasis::Fourier { .. } => Err(Error::InvalidArgument("real coefficients need a real right basis".into())),
        }
    }

    /// `Σᵢ cᵢ vᵢ` over the leading `m` right singular vectors.
    pub fn synthesize(&self, coeffs: &Vector) -> Result<Vector> {
        check_len(self.m(), coeffs.len())?;
        match &self.basis {
            RightBasis::Dense(v) => Ok(v * coeffs),
            RightBasis::Canonical => {
                let mut out = Vector::zeros(self.n);
                out.rows_mut(0, self.m()).copy_from(coeffs);
                Ok(out)
            }
            RightBasis::Fourier { .. } => Err(Error::InvalidArgument("synthesis needs a real right basis".into())),
        }
    }

    /// Column `i` of `V` (`i < m`).
    pub fn basis_vector(&self, i: usize) -> Result<Vector> {
        let mut e = Vector::zeros(self.m());
        if i >= self.m() {
            return Err(Error::Dimension { expected: self.m(), got: i });
        }
        e[i] = 1.0;
        self.synthesize(&e)
    }
}

/// Full spectral decomposition of `A`: DFT magnitudes for circulant
/// operators, otherwise the eigendecomposition of the dense Gram matrix
/// `AAᵀ = UΛ²Uᵀ` with `V = AᵀUΛ⁻¹`.
pub fn spectrum(op: &LinearOperator) -> Result<SpectralDecomposition> {
    let (m, n) = op.dims();
    if let Some(diag) = op.fourier_diagonal() {
        let mags: Vec<f64> = diag.symbol.iter().map(|h| h.norm()).collect();
        let mut order: Vec<usize> = (0..mags.len()).collect();
        order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
        let singular_values: Vec<f64> = order.iter().map(|&k| mags[k]).collect();
        let smallest = *singular_values.last().unwrap();
        if !(smallest > 0.0) {
            return Err(Error::RankDeficient(smallest));
        }
        return Ok(SpectralDecomposition {
            singular_values,
            basis: RightBasis::Fourier { fft: diag.fft, order },
            left: None,
            n,
        });
    }
    let a = op.materialize()?;
    let eig = SymmetricEigen::new(&a * a.transpose());
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let singular_values: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let (largest, smallest) = (singular_values[0], singular_values[m - 1]);
    if !(smallest > 1e-12 * largest) {
        return Err(Error::RankDeficient(smallest));
    }
    let mut u = DMatrix::zeros(m, m);
    for (col, &i) in idx.iter().enumerate() {
        u.set_column(col, &eig.eigenvectors.column(i));
    }
    let mut v = a.tr_mul(&u);
    for (mut col, s) in v.column_iter_mut().zip(&singular_values) {
        col /= *s;
    }
    Ok(SpectralDecomposition { singular_values, basis: RightBasis::Dense(v), left: Some(u), n })
}

/// Descending singular values only (cheaper than [`spectrum`] on the dense path).
pub fn singular_values(op: &LinearOperator) -> Result<Vec<f64>> {
    if let Some(diag) = op.fourier_diagonal() {
        let mut s: Vec<f64> = diag.symbol.iter().map(|h| h.norm()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        return Ok(s);
    }
    let a = op.materialize()?;
    let mut s: Vec<f64> = (&a * a.transpose()).symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `λ₁² / λ_m²`.
pub fn condition_number_sq(spec: &SpectralDecomposition) -> f64 {
    let s = spec.singular_values();
    (s[0] / s[s.len() - 1]).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric positive semidefinite map by power
/// iteration with Rayleigh quotients, from a fixed pseudo-random start.
pub fn power_method(
    mut apply: impl FnMut(&Vector) -> Result<Vector>,
    n: usize,
    iters: usize,
    tol: f64,
) -> Result<PowerEstimate> {
    if iters == 0 {
        return Err(Error::InvalidArgument("power method needs at least one iteration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();
    let mut estimate = 0.0;
    for k in 1..=iters {
        let w = apply(&v)?;
        let next = v.dot(&w);
        if !next.is_finite() {
            return Err(Error::Numerical("power method"));
        }
        let norm = w.norm();
        let done = k > 1 && (next - estimate).abs() <= tol * next.abs();
        estimate = next;
        if done || norm == 0.0 {
            return Ok(PowerEstimate { value: estimate, iterations: k, converged: true });
        }
        v = w / norm;
    }
    Ok(PowerEstimate { value: estimate, iterations: iters, converged: false })
}

/// Power-method estimate of `λ₁² = ‖AᵀA‖`.
pub fn sq_spectral_norm(op: &LinearOperator, iters: usize, tol: f64) -> Result<PowerEstimate> {
    let (_, n) = op.dims();
    power_method(|x| op.adjoint(&op.apply(x)?), n, iters, tol)
}
