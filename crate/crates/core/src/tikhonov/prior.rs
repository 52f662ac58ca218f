use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{check_len, Error, Result};
use crate::linops::{diff, difference_symbol, RightBasis, Shape, SpectralDecomposition};
use crate::Vector;

/// Diagonal loading that makes the finite-difference Gram matrix definite.
pub const FD_LOADING: f64 = 0.01;
/// Pixel stride of the sparse finite-difference operator.
pub const SPARSE_FD_STRIDE: usize = 8;

/// Tikhonov prior `s(x) = ½‖Dx‖²`, described through `DᵀD ≻ 0`.
#[derive(Debug, Clone)]
pub enum L2Prior {
    Identity,
    /// `ΩᵀΩ + loading·I` with circular forward differences.
    FiniteDifference { shape: Shape, loading: f64 },
    /// Finite differences at every `stride`-th pixel (row-major order),
    /// identity rows elsewhere, plus `loading·I`.
    SparseFiniteDifference { shape: Shape, stride: usize, loading: f64 },
    DenseDtD(DMatrix<f64>),
    /// `DᵀD = V diag(γ²) Vᵀ + null_gamma_sq·(I − VVᵀ)` on a real basis.
    SpectralGamma { spec: Arc<SpectralDecomposition>, gamma_sq: Vec<f64>, null_gamma_sq: f64 },
}

impl L2Prior {
    pub fn finite_difference(shape: Shape) -> Self {
        Self::FiniteDifference { shape, loading: FD_LOADING }
    }

    pub fn sparse_finite_difference(shape: Shape) -> Self {
        Self::SparseFiniteDifference { shape, stride: SPARSE_FD_STRIDE, loading: FD_LOADING }
    }

    pub fn dense(dtd: DMatrix<f64>) -> Result<Self> {
        if !dtd.is_square() {
            return Err(Error::InvalidArgument("DᵀD must be square".into()));
        }
        if (&dtd - dtd.transpose()).amax() > 1e-12 * dtd.amax().max(1.0) {
            return Err(Error::InvalidArgument("DᵀD must be symmetric".into()));
        }
        if Cholesky::new(dtd.clone()).is_none() {
            return Err(Error::InvalidArgument("DᵀD must be positive definite".into()));
        }
        Ok(Self::DenseDtD(dtd))
    }

    pub fn spectral(spec: Arc<SpectralDecomposition>, gamma_sq: Vec<f64>, null_gamma_sq: f64) -> Result<Self> {
        if matches!(spec.basis(), RightBasis::Fourier { .. }) {
            return Err(Error::InvalidArgument("spectral prior needs a real right basis".into()));
        }
        check_len(spec.m(), gamma_sq.len())?;
        if gamma_sq.iter().chain(std::iter::once(&null_gamma_sq)).any(|g| !(*g > 0.0)) {
            return Err(Error::InvalidArgument("gamma values must be positive".into()));
        }
        Ok(Self::SpectralGamma { spec, gamma_sq, null_gamma_sq })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Identity => "l2",
            Self::FiniteDifference { .. } => "l2fd",
            Self::SparseFiniteDifference { .. } => "l2fd-sparse",
            Self::DenseDtD(_) => "l2dense",
            Self::SpectralGamma { .. } => "l2spectral",
        }
    }

    pub fn apply_dtd(&self, x: &Vector) -> Result<Vector> {
        match self {
            Self::Identity => Ok(x.clone()),
            Self::FiniteDifference { shape, loading } => {
                check_len(shape.len(), x.len())?;
                let mut out = diff::difference_gram(x, *shape);
                out.axpy(*loading, x, 1.0);
                Ok(out)
            }
            Self::SparseFiniteDifference { shape, stride, loading } => {
                check_len(shape.len(), x.len())?;
                Ok(sparse_fd_gram(x, *shape, *stride, *loading))
            }
            Self::DenseDtD(m) => {
                check_len(m.ncols(), x.len())?;
                Ok(m * x)
            }
            Self::SpectralGamma { spec, gamma_sq, null_gamma_sq } => {
                let c = spec.real_coefficients(x)?;
                let in_span = spec.synthesize(&c)?;
                let scaled = Vector::from_iterator(c.len(), c.iter().zip(gamma_sq).map(|(c, g)| c * g));
                Ok(spec.synthesize(&scaled)? + (x - in_span) * *null_gamma_sq)
            }
        }
    }

    /// `½ xᵀDᵀDx`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        Ok(0.5 * x.dot(&self.apply_dtd(x)?))
    }

    /// Eigenvalues of `DᵀD` in the 2D DFT basis when `DᵀD` is circulant on `shape`.
    pub fn fourier_symbol(&self, shape: Shape) -> Option<Vec<f64>> {
        match self {
            Self::Identity => Some(vec![1.0; shape.len()]),
            Self::FiniteDifference { shape: s, loading } if *s == shape => {
                Some(difference_symbol(shape).into_iter().map(|v| v + loading).collect())
            }
            _ => None,
        }
    }
}

fn sparse_fd_gram(x: &Vector, shape: Shape, stride: usize, loading: f64) -> Vector {
    let Shape { height, width } = shape;
    let mut out = x * loading;
    for p in 0..shape.len() {
        if p % stride == 0 {
            let (r, c) = (p / width, p % width);
            let down = ((r + 1) % height) * width + c;
            let right = r * width + (c + 1) % width;
            let dv = x[down] - x[p];
            out[down] += dv;
            out[p] -= dv;
            let dh = x[right] - x[p];
            out[right] += dh;
            out[p] -= dh;
        } else {
            out[p] += x[p];
        }
    }
    out
}
