//! Two-dimensional DFT on row-major images, built from 1D rustfft plans.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Shape;

#[derive(Clone)]
pub struct Fft2 {
    shape: Shape,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("shape", &self.shape).finish()
    }
}

impl Fft2 {
    pub fn new(shape: Shape) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape,
            row_fwd: planner.plan_fft_forward(shape.width),
            row_inv: planner.plan_fft_inverse(shape.width),
            col_fwd: planner.plan_fft_forward(shape.height),
            col_inv: planner.plan_fft_inverse(shape.height),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.row_fwd, &self.col_fwd);
        buf
    }

    /// Inverse transform (normalised by `1/n`) keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.row_inv, &self.col_inv);
        let scale = 1.0 / self.shape.len() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies the spectrum of `x` pointwise by `symbol` and transforms back.
    pub fn filter(&self, x: &[f64], symbol: &[Complex64]) -> Vec<f64> {
        let mut spec = self.forward_real(x);
        for (s, h) in spec.iter_mut().zip(symbol) {
            *s *= h;
        }
        self.inverse_real(spec)
    }

    /// Same as [`Fft2::filter`] for a real-valued symbol.
    pub fn filter_real(&self, x: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut spec = self.forward_real(x);
        for (s, h) in spec.iter_mut().zip(symbol) {
            *s *= h;
        }
        self.inverse_real(spec)
    }

    fn transform(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let Shape { height, width } = self.shape;
        for row in buf.chunks_exact_mut(width) {
            rows.process(row);
        }
        let mut column = vec![Complex64::default(); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = buf[r * width + c];
            }
            cols.process(&mut column);
            for r in 0..height {
                buf[r * width + c] = column[r];
            }
        }
    }
}

/// Real symbol of the circular forward-difference Laplacian `DvᵀDv + DhᵀDh`.
pub fn difference_symbol(shape: Shape) -> Vec<f64> {
    let Shape { height, width } = shape;
    let mut out = Vec::with_capacity(shape.len());
    for r in 0..height {
        let sr = (std::f64::consts::PI * r as f64 / height as f64).sin();
        for c in 0..width {
            let sc = (std::f64::consts::PI * c as f64 / width as f64).sin();
            out.push(4.0 * sr * sr + 4.0 * sc * sc);
        }
    }
    out
}
