//! Circular forward differences on row-major images.

use super::Shape;
use crate::Vector;

/// Vertical and horizontal forward differences with wrap-around:
/// `dv[r,c] = x[r+1,c] − x[r,c]`, `dh[r,c] = x[r,c+1] − x[r,c]`.
pub fn forward_diff(x: &[f64], shape: Shape) -> (Vec<f64>, Vec<f64>) {
    let Shape { height, width } = shape;
    let mut dv = vec![0.0; shape.len()];
    let mut dh = vec![0.0; shape.len()];
    for r in 0..height {
        let down = ((r + 1) % height) * width;
        for c in 0..width {
            let p = r * width + c;
            let right = r * width + (c + 1) % width;
            dv[p] = x[down + c] - x[p];
            dh[p] = x[right] - x[p];
        }
    }
    (dv, dh)
}

/// Adjoint of [`forward_diff`] (a negative divergence).
pub fn forward_diff_adjoint(dv: &[f64], dh: &[f64], shape: Shape) -> Vec<f64> {
    let Shape { height, width } = shape;
    let mut out = vec![0.0; shape.len()];
    for r in 0..height {
        let up = ((r + height - 1) % height) * width;
        for c in 0..width {
            let p = r * width + c;
            let left = r * width + (c + width - 1) % width;
            out[p] = dv[up + c] - dv[p] + dh[left] - dh[p];
        }
    }
    out
}

/// `(DvᵀDv + DhᵀDh) x`.
pub fn difference_gram(x: &Vector, shape: Shape) -> Vector {
    let (dv, dh) = forward_diff(x.as_slice(), shape);
    Vector::from_vec(forward_diff_adjoint(&dv, &dh, shape))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoint_identity_holds() {
        let shape = Shape::new(5, 7);
        let x: Vec<f64> = (0..35).map(|i| (i as f64 * 1.3).sin()).collect();
        let p: Vec<f64> = (0..35).map(|i| (i as f64 * 0.4).cos()).collect();
        let q: Vec<f64> = (0..35).map(|i| (i as f64 * 2.1).sin()).collect();
        let (dv, dh) = forward_diff(&x, shape);
        let lhs: f64 = dv.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() + dh.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        let adj = forward_diff_adjoint(&p, &q, shape);
        let rhs: f64 = x.iter().zip(&adj).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
