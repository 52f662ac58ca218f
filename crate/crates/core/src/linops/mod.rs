//! Linear forward operators `A` and the spectral machinery built on them.

pub mod diff;
mod fft;
pub mod haar;
mod kernels;
mod pinv;
mod spectral;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::Vector;

pub use fft::{difference_symbol, Fft2};
pub use kernels::Kernel;
pub use pinv::{PinvStrategy, PseudoInverse, CG_MAX_ITERS, CG_TOL};
pub use spectral::{
    condition_number_sq, power_method, singular_values, spectrum, sq_spectral_norm, PowerEstimate,
    RightBasis, SpectralCoefficients, SpectralDecomposition,
};

/// Largest signal length for which operators are materialised densely.
pub const DENSE_LIMIT: usize = 8192;

/// Image dimensions; pixel `(r, c)` lives at index `r * width + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub const fn square(side: usize) -> Self {
        Self::new(side, side)
    }

    pub const fn len(&self) -> usize {
        self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A signal `x`, optionally carrying its 2D image shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vector,
    shape: Option<Shape>,
}

impl Signal {
    pub fn new(values: Vector) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("signal values"));
        }
        Ok(Self { values, shape: None })
    }

    pub fn image(values: Vector, shape: Shape) -> Result<Self> {
        check_len(shape.len(), values.len())?;
        let mut s = Self::new(values)?;
        s.shape = Some(shape);
        Ok(s)
    }

    pub fn values(&self) -> &Vector {
        &self.values
    }

    pub fn shape(&self) -> Option<Shape> {
        self.shape
    }

    pub fn require_shape(&self) -> Result<Shape> {
        self.shape.ok_or(Error::Shape)
    }

    pub fn into_values(self) -> Vector {
        self.values
    }
}

/// Circular 2D convolution with a small kernel centred at the origin.
#[derive(Debug, Clone)]
pub struct Circulant {
    kernel: Kernel,
    shape: Shape,
    symbol: Vec<Complex64>,
    fft: Fft2,
}

impl Circulant {
    pub fn new(kernel: Kernel, shape: Shape) -> Self {
        let fft = Fft2::new(shape);
        let mut padded = vec![0.0; shape.len()];
        let (ch, cw) = (kernel.height / 2, kernel.width / 2);
        for i in 0..kernel.height {
            for j in 0..kernel.width {
                let r = (i + shape.height * kernel.height - ch) % shape.height;
                let c = (j + shape.width * kernel.width - cw) % shape.width;
                padded[r * shape.width + c] += kernel.taps[i * kernel.width + j];
            }
        }
        let symbol = fft.forward_real(&padded);
        Self { kernel, shape, symbol, fft }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// DFT of the zero-padded kernel, i.e. the eigenvalues of the operator.
    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }
}

/// DFT-diagonal view of a circulant operator.
#[derive(Debug, Clone)]
pub struct FourierDiagonal {
    pub fft: Fft2,
    pub symbol: Vec<Complex64>,
}

impl FourierDiagonal {
    pub fn shape(&self) -> Shape {
        self.fft.shape()
    }
}

#[derive(Debug, Clone)]
pub enum LinearOperator {
    Identity { n: usize },
    /// Selection of the listed (sorted, distinct) entries of the signal.
    InpaintMask { kept: Vec<usize>, n: usize },
    CirculantConv2D(Circulant),
    /// Keeps pixel `(0, 0)` and every `factor`-th pixel after it along both axes.
    Downsample2D { factor: usize, shape: Shape },
    /// Stages applied in order: the first stage acts on the input signal.
    Composite { stages: Vec<LinearOperator> },
    DenseMatrix(DMatrix<f64>),
    GaussianMeasurement { seed: u64, matrix: DMatrix<f64> },
    /// Forward orthonormal Haar analysis transform.
    HaarBasis2D { shape: Shape },
}

impl LinearOperator {
    pub fn identity(n: usize) -> Self {
        Self::Identity { n }
    }

    pub fn inpaint(mut kept: Vec<usize>, n: usize) -> Result<Self> {
        kept.sort_unstable();
        kept.dedup();
        if kept.last().is_some_and(|&k| k >= n) {
            return Err(Error::InvalidArgument(format!("mask index out of range for n = {n}")));
        }
        if kept.is_empty() {
            return Err(Error::InvalidArgument("inpainting mask keeps no samples".into()));
        }
        Ok(Self::InpaintMask { kept, n })
    }

    pub fn circulant(kernel: Kernel, shape: Shape) -> Self {
        Self::CirculantConv2D(Circulant::new(kernel, shape))
    }

    pub fn downsample(factor: usize, shape: Shape) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("downsampling factor must be positive".into()));
        }
        Ok(Self::Downsample2D { factor, shape })
    }

    pub fn composite(stages: Vec<LinearOperator>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidArgument("composite operator needs at least one stage".into()));
        }
        for pair in stages.windows(2) {
            let (m_prev, _) = pair[0].dims();
            let (_, n_next) = pair[1].dims();
            check_len(n_next, m_prev)?;
        }
        Ok(Self::Composite { stages })
    }

    /// Wraps a dense matrix, verifying `m <= n` and full row rank for small sizes.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let (m, n) = matrix.shape();
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("dense operator must satisfy 0 < m <= n, got {m}x{n}")));
        }
        if m * n <= 1 << 20 {
            let sv = matrix.singular_values();
            let max = sv.max();
            let min = sv.min();
            if !(min > 1e-12 * max) {
                return Err(Error::RankDeficient(min));
            }
        }
        Ok(Self::DenseMatrix(matrix))
    }

    /// `m x n` matrix with i.i.d. `N(0, 1/m)` entries drawn row by row.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("gaussian measurement needs 0 < m <= n, got {m}x{n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (m as f64).sqrt()).expect("positive std");
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            data.push(normal.sample(&mut rng));
        }
        Ok(Self::GaussianMeasurement { seed, matrix: DMatrix::from_row_slice(m, n, &data) })
    }

    pub fn haar(shape: Shape) -> Self {
        Self::HaarBasis2D { shape }
    }

    /// `(m, n)`: number of observations and signal length.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Identity { n } => (*n, *n),
            Self::InpaintMask { kept, n } => (kept.len(), *n),
            Self::CirculantConv2D(c) => (c.shape.len(), c.shape.len()),
            Self::Downsample2D { factor, shape } => {
                let out = downsampled_shape(*shape, *factor);
                (out.len(), shape.len())
            }
            Self::Composite { stages } => (stages.last().unwrap().dims().0, stages[0].dims().1),
            Self::DenseMatrix(a) | Self::GaussianMeasurement { matrix: a, .. } => a.shape(),
            Self::HaarBasis2D { shape } => (shape.len(), shape.len()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Identity { .. } => "identity".into(),
            Self::InpaintMask { .. } => "inpaint".into(),
            Self::CirculantConv2D(c) => format!("conv{}x{}", c.kernel.height, c.kernel.width),
            Self::Downsample2D { factor, .. } => format!("down{factor}"),
            Self::Composite { stages } => {
                stages.iter().rev().map(|s| s.name()).collect::<Vec<_>>().join("*")
            }
            Self::DenseMatrix(_) => "dense".into(),
            Self::GaussianMeasurement { .. } => "gaussian".into(),
            Self::HaarBasis2D { .. } => "haar".into(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let (m, n) = self.dims();
        check_len(n, x.len())?;
        let out = match self {
            Self::Identity { .. } => x.clone(),
            Self::InpaintMask { kept, .. } => Vector::from_iterator(m, kept.iter().map(|&i| x[i])),
            Self::CirculantConv2D(c) => Vector::from_vec(c.fft.filter(x.as_slice(), &c.symbol)),
            Self::Downsample2D { factor, shape } => {
                let mut out = Vec::with_capacity(m);
                for r in (0..shape.height).step_by(*factor) {
                    for col in (0..shape.width).step_by(*factor) {
                        out.push(x[r * shape.width + col]);
                    }
                }
                Vector::from_vec(out)
            }
            Self::Composite { stages } => {
                let mut v = x.clone();
                for s in stages {
                    v = s.apply(&v)?;
                }
                v
            }
            Self::DenseMatrix(a) | Self::GaussianMeasurement { matrix: a, .. } => a * x,
            Self::HaarBasis2D { shape } => Vector::from_vec(haar::forward(x.as_slice(), *shape)),
        };
        Ok(out)
    }

    pub fn adjoint(&self, v: &Vector) -> Result<Vector> {
        let (m, n) = self.dims();
        check_len(m, v.len())?;
        let out = match self {
            Self::Identity { .. } => v.clone(),
            Self::InpaintMask { kept, .. } => {
                let mut out = Vector::zeros(n);
                for (&i, &val) in kept.iter().zip(v.iter()) {
                    out[i] = val;
                }
                out
            }
            Self::CirculantConv2D(c) => {
                let conj: Vec<Complex64> = c.symbol.iter().map(|h| h.conj()).collect();
                Vector::from_vec(c.fft.filter(v.as_slice(), &conj))
            }
            Self::Downsample2D { factor, shape } => {
                let mut out = Vector::zeros(n);
                let mut k = 0;
                for r in (0..shape.height).step_by(*factor) {
                    for col in (0..shape.width).step_by(*factor) {
                        out[r * shape.width + col] = v[k];
                        k += 1;
                    }
                }
                out
            }
            Self::Composite { stages } => {
                let mut w = v.clone();
                for s in stages.iter().rev() {
                    w = s.adjoint(&w)?;
                }
                w
            }
            Self::DenseMatrix(a) | Self::GaussianMeasurement { matrix: a, .. } => a.tr_mul(v),
            Self::HaarBasis2D { shape } => Vector::from_vec(haar::inverse(v.as_slice(), *shape)),
        };
        Ok(out)
    }

    /// Returns the DFT-diagonal form when the operator is circular convolution
    /// (or a chain of circular convolutions on one grid).
    pub fn fourier_diagonal(&self) -> Option<FourierDiagonal> {
        match self {
            Self::CirculantConv2D(c) => Some(FourierDiagonal { fft: c.fft.clone(), symbol: c.symbol.clone() }),
            Self::Composite { stages } => {
                let mut acc: Option<FourierDiagonal> = None;
                for s in stages {
                    let d = s.fourier_diagonal()?;
                    acc = Some(match acc {
                        None => d,
                        Some(mut a) => {
                            if a.shape() != d.shape() {
                                return None;
                            }
                            a.symbol.iter_mut().zip(&d.symbol).for_each(|(x, y)| *x *= y);
                            a
                        }
                    });
                }
                acc
            }
            _ => None,
        }
    }

    /// True when `AAᵀ = I`, so that `A† = Aᵀ`.
    pub fn has_orthonormal_rows(&self) -> bool {
        match self {
            Self::Identity { .. }
            | Self::InpaintMask { .. }
            | Self::Downsample2D { .. }
            | Self::HaarBasis2D { .. } => true,
            Self::Composite { stages } => stages.iter().all(|s| s.has_orthonormal_rows()),
            _ => false,
        }
    }

    /// Dense `m x n` matrix of the operator.
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let (m, n) = self.dims();
        if n > DENSE_LIMIT {
            return Err(Error::UnsupportedScale { n, limit: DENSE_LIMIT });
        }
        match self {
            Self::DenseMatrix(a) | Self::GaussianMeasurement { matrix: a, .. } => Ok(a.clone()),
            Self::Composite { stages } if matches!(stages.last(), Some(Self::DenseMatrix(_) | Self::GaussianMeasurement { .. })) => {
                // Rows of G·B are (Bᵀ gᵢ)ᵀ, which avoids forming B densely.
                let last = stages.last().unwrap().materialize()?;
                let prefix = Self::Composite { stages: stages[..stages.len() - 1].to_vec() };
                let mut out = DMatrix::zeros(m, n);
                for i in 0..m {
                    let row = prefix.adjoint(&last.row(i).transpose())?;
                    out.row_mut(i).copy_from(&row.transpose());
                }
                Ok(out)
            }
            _ => {
                let mut out = DMatrix::zeros(m, n);
                let mut e = Vector::zeros(m);
                for i in 0..m {
                    e[i] = 1.0;
                    let row = self.adjoint(&e)?;
                    e[i] = 0.0;
                    out.row_mut(i).copy_from(&row.transpose());
                }
                Ok(out)
            }
        }
    }
}

pub fn downsampled_shape(shape: Shape, factor: usize) -> Shape {
    Shape::new(shape.height.div_ceil(factor), shape.width.div_ceil(factor))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn inpaint_selects_and_zero_pads() {
        let a = LinearOperator::inpaint(vec![0, 2], 3).unwrap();
        assert_eq!(a.apply(&v(&[1.0, 2.0, 3.0])).unwrap(), v(&[1.0, 3.0]));
        assert_eq!(a.adjoint(&v(&[5.0, 7.0])).unwrap(), v(&[5.0, 0.0, 7.0]));
    }

    #[test]
    fn identity_adjoint_is_identity() {
        let a = LinearOperator::identity(3);
        assert_eq!(a.adjoint(&v(&[1.0, -2.0, 4.0])).unwrap(), v(&[1.0, -2.0, 4.0]));
    }

    #[test]
    fn delta_kernel_convolution_is_identity() {
        let shape = Shape::new(6, 5);
        let a = LinearOperator::circulant(Kernel::delta(), shape);
        let x = Vector::from_fn(30, |i, _| (i as f64).sqrt());
        assert!((a.apply(&x).unwrap() - &x).amax() < 1e-12);
    }

    #[test]
    fn circular_convolution_wraps_at_the_border() {
        let shape = Shape::new(4, 4);
        let a = LinearOperator::circulant(Kernel::uniform(3), shape);
        let mut x = Vector::zeros(16);
        x[0] = 9.0;
        let y = a.apply(&x).unwrap();
        for (r, c) in [(0, 0), (0, 1), (0, 3), (1, 0), (3, 3), (3, 1)] {
            assert!((y[r * 4 + c] - 1.0).abs() < 1e-12);
        }
        assert!(y[2 * 4 + 2].abs() < 1e-12);
    }

    #[test]
    fn sr_composite_has_paper_dimensions() {
        let shape = Shape::square(64);
        let a = LinearOperator::composite(vec![
            LinearOperator::circulant(Kernel::gaussian(7, 1.6), shape),
            LinearOperator::downsample(3, shape).unwrap(),
        ])
        .unwrap();
        assert_eq!(a.dims(), (484, 4096));
        assert_eq!(a.apply(&Vector::zeros(4096)).unwrap().len(), 484);
    }

    #[test]
    fn dimension_errors_are_reported() {
        let a = LinearOperator::inpaint(vec![0, 2], 3).unwrap();
        assert!(matches!(a.apply(&Vector::zeros(2)), Err(Error::Dimension { expected: 3, got: 2 })));
        assert!(matches!(a.adjoint(&Vector::zeros(3)), Err(Error::Dimension { expected: 2, got: 3 })));
    }

    #[test]
    fn rank_deficient_dense_is_rejected() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(LinearOperator::dense(a), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn materialize_matches_apply() {
        let shape = Shape::new(4, 4);
        let a = LinearOperator::composite(vec![
            LinearOperator::haar(shape),
            LinearOperator::gaussian(5, 16, 3).unwrap(),
        ])
        .unwrap();
        let dense = a.materialize().unwrap();
        let x = Vector::from_fn(16, |i, _| (i as f64 * 0.7).cos());
        assert!((&dense * &x - a.apply(&x).unwrap()).amax() < 1e-12);

        let sr = LinearOperator::composite(vec![
            LinearOperator::circulant(Kernel::gaussian(3, 1.0), shape),
            LinearOperator::downsample(2, shape).unwrap(),
        ])
        .unwrap();
        let dense = sr.materialize().unwrap();
        assert!((&dense * &x - sr.apply(&x).unwrap()).amax() < 1e-12);
    }

    #[test]
    fn signal_rejects_non_finite_and_bad_shape() {
        assert!(Signal::new(v(&[1.0, f64::NAN])).is_err());
        assert!(matches!(Signal::image(v(&[1.0; 5]), Shape::new(2, 2)), Err(Error::Dimension { .. })));
        assert!(matches!(Signal::new(v(&[1.0])).unwrap().require_shape(), Err(Error::Shape)));
    }
}
