//! Orthonormal multi-level 2D Haar transform (row-major images).
//!
//! Levels continue while both dimensions of the current approximation band
//! are even and larger than one, so a 64x64 image is decomposed down to a
//! single coarse coefficient.

use std::f64::consts::FRAC_1_SQRT_2;

use super::Shape;

fn levels(shape: Shape) -> Vec<(usize, usize)> {
    let (mut h, mut w) = (shape.height, shape.width);
    let mut out = Vec::new();
    while h % 2 == 0 && w % 2 == 0 && h > 1 && w > 1 {
        out.push((h, w));
        h /= 2;
        w /= 2;
    }
    out
}

fn forward_1d(data: &mut [f64], scratch: &mut [f64]) {
    let half = data.len() / 2;
    for i in 0..half {
        let (a, b) = (data[2 * i], data[2 * i + 1]);
        scratch[i] = (a + b) * FRAC_1_SQRT_2;
        scratch[half + i] = (a - b) * FRAC_1_SQRT_2;
    }
    data.copy_from_slice(&scratch[..data.len()]);
}

fn inverse_1d(data: &mut [f64], scratch: &mut [f64]) {
    let half = data.len() / 2;
    for i in 0..half {
        let (s, d) = (data[i], data[half + i]);
        scratch[2 * i] = (s + d) * FRAC_1_SQRT_2;
        scratch[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
    }
    data.copy_from_slice(&scratch[..data.len()]);
}

fn for_block(x: &mut [f64], width: usize, h: usize, w: usize, inverse: bool) {
    let mut line = vec![0.0; h.max(w)];
    let mut scratch = vec![0.0; h.max(w)];
    let step = if inverse { inverse_1d } else { forward_1d };
    let do_rows = |x: &mut [f64], line: &mut [f64], scratch: &mut [f64]| {
        for r in 0..h {
            let row = &mut x[r * width..r * width + w];
            line[..w].copy_from_slice(row);
            step(&mut line[..w], scratch);
            row.copy_from_slice(&line[..w]);
        }
    };
    let do_cols = |x: &mut [f64], line: &mut [f64], scratch: &mut [f64]| {
        for c in 0..w {
            for r in 0..h {
                line[r] = x[r * width + c];
            }
            step(&mut line[..h], scratch);
            for r in 0..h {
                x[r * width + c] = line[r];
            }
        }
    };
    if inverse {
        do_cols(x, &mut line, &mut scratch);
        do_rows(x, &mut line, &mut scratch);
    } else {
        do_rows(x, &mut line, &mut scratch);
        do_cols(x, &mut line, &mut scratch);
    }
}

pub fn forward(x: &[f64], shape: Shape) -> Vec<f64> {
    let mut out = x.to_vec();
    for (h, w) in levels(shape) {
        for_block(&mut out, shape.width, h, w, false);
    }
    out
}

pub fn inverse(c: &[f64], shape: Shape) -> Vec<f64> {
    let mut out = c.to_vec();
    for (h, w) in levels(shape).into_iter().rev() {
        for_block(&mut out, shape.width, h, w, true);
    }
    out
}
