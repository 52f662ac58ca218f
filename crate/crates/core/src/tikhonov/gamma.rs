use std::f64::consts::TAU;

use super::L2Prior;
use crate::error::{Error, Result};
use crate::linops::{RightBasis, SpectralDecomposition};
use crate::Vector;

/// Relative off-diagonal energy below which `V` is taken to diagonalise `DᵀD`.
pub const JOINT_DIAGONAL_TOL: f64 = 1e-8;

/// `γᵢ² = (VᵀDᵀDV)ᵢᵢ` together with how far `VᵀDᵀDV` is from diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub gamma_sq: Vec<f64>,
    /// `‖DᵀDvᵢ‖² − γᵢ⁴` summed over `i`, relative to `Σ γᵢ⁴`: the energy
    /// that `DᵀD` moves out of each leading singular direction.
    pub off_diagonal_ratio: f64,
    /// True when the ratio is below [`JOINT_DIAGONAL_TOL`], i.e. the
    /// spectral MSE formulas are exact rather than approximate.
    pub exact: bool,
}

impl GammaEstimate {
    fn new(gamma_sq: Vec<f64>, moved: f64, diag: f64) -> Result<Self> {
        if gamma_sq.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::Numerical("prior is not positive definite on the right singular basis"));
        }
        let off_diagonal_ratio = (moved - diag).max(0.0) / diag;
        Ok(Self { gamma_sq, off_diagonal_ratio, exact: off_diagonal_ratio <= JOINT_DIAGONAL_TOL })
    }
}

/// Extracts `γᵢ²` for the `m` leading right singular vectors of `spec`.
pub fn gamma_from_prior(prior: &L2Prior, spec: &SpectralDecomposition) -> Result<GammaEstimate> {
    let m = spec.m();
    if let L2Prior::Identity = prior {
        return GammaEstimate::new(vec![1.0; m], m as f64, m as f64);
    }
    if let L2Prior::SpectralGamma { spec: own, gamma_sq, .. } = prior {
        if std::ptr::eq(own.as_ref(), spec) {
            let diag = gamma_sq.iter().map(|g| g * g).sum();
            return GammaEstimate::new(gamma_sq.clone(), diag, diag);
        }
    }
    let (mut gamma_sq, mut moved, mut diag) = (Vec::with_capacity(m), 0.0, 0.0);
    let mut record = |real: &[(Vector, Vector)]| {
        // Complex basis vectors arrive as (real part, imaginary part).
        let g: f64 = real.iter().map(|(v, w)| v.dot(w)).sum();
        moved += real.iter().map(|(_, w)| w.norm_squared()).sum::<f64>();
        diag += g * g;
        gamma_sq.push(g);
    };
    match spec.basis() {
        RightBasis::Dense(v) => {
            let w = match prior {
                L2Prior::DenseDtD(dtd) => dtd * v,
                _ => {
                    let mut w = v.clone();
                    for (i, col) in v.column_iter().enumerate() {
                        w.set_column(i, &prior.apply_dtd(&col.into_owned())?);
                    }
                    w
                }
            };
            for i in 0..m {
                record(&[(v.column(i).into_owned(), w.column(i).into_owned())]);
            }
        }
        RightBasis::Canonical => {
            for i in 0..m {
                let mut e = Vector::zeros(spec.n());
                e[i] = 1.0;
                let w = prior.apply_dtd(&e)?;
                record(&[(e, w)]);
            }
        }
        RightBasis::Fourier { fft, order } => {
            let shape = fft.shape();
            let (h, w) = (shape.height, shape.width);
            let scale = 1.0 / (shape.len() as f64).sqrt();
            for &k in order {
                let (k1, k2) = (k / w, k % w);
                let mut re = Vector::zeros(shape.len());
                let mut im = Vector::zeros(shape.len());
                for r in 0..h {
                    for c in 0..w {
                        let phase = TAU * (((k1 * r) % h) as f64 / h as f64 + ((k2 * c) % w) as f64 / w as f64);
                        re[r * w + c] = phase.cos() * scale;
                        im[r * w + c] = phase.sin() * scale;
                    }
                }
                let mre = prior.apply_dtd(&re)?;
                let mim = prior.apply_dtd(&im)?;
                record(&[(re, mre), (im, mim)]);
            }
        }
    }
    GammaEstimate::new(gamma_sq, moved, diag)
}
