use crate::error::{check_len, Error, Result};
use crate::linops::Shape;
use crate::Vector;

/// Cubic convolution kernel with parameter `a = −0.5`.
fn cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Interpolates a line of `len` samples onto `len·factor` points; output
/// point `j` sits at input coordinate `j / factor`, edges replicated.
fn upsample_line(line: &[f64], factor: usize, out: &mut [f64]) {
    let len = line.len() as isize;
    for (j, o) in out.iter_mut().enumerate() {
        let pos = j as f64 / factor as f64;
        let base = pos.floor() as isize;
        let frac = pos - base as f64;
        *o = (-1..=2)
            .map(|k| {
                let idx = (base + k).clamp(0, len - 1) as usize;
                cubic(frac - k as f64) * line[idx]
            })
            .sum();
    }
}

/// Separable bicubic upsampling by an integer factor (rows, then columns).
pub fn bicubic_upsample(image: &Vector, shape: Shape, factor: usize) -> Result<(Vector, Shape)> {
    check_len(shape.len(), image.len())?;
    if factor < 2 {
        return Err(Error::InvalidArgument(format!("upsampling factor must be >= 2, got {factor}")));
    }
    let (h, w) = (shape.height, shape.width);
    let out_shape = Shape::new(h * factor, w * factor);
    let wide_w = w * factor;
    let mut wide = vec![0.0; h * wide_w];
    for r in 0..h {
        upsample_line(&image.as_slice()[r * w..(r + 1) * w], factor, &mut wide[r * wide_w..(r + 1) * wide_w]);
    }
    let mut out = Vector::zeros(out_shape.len());
    let mut column = vec![0.0; h];
    let mut tall = vec![0.0; out_shape.height];
    for c in 0..wide_w {
        for r in 0..h {
            column[r] = wide[r * wide_w + c];
        }
        upsample_line(&column, factor, &mut tall);
        for (r, v) in tall.iter().enumerate() {
            out[r * wide_w + c] = *v;
        }
    }
    Ok((out, out_shape))
}

/// Top-left `target` window of an image.
pub fn crop(image: &Vector, shape: Shape, target: Shape) -> Result<Vector> {
    check_len(shape.len(), image.len())?;
    if target.height > shape.height || target.width > shape.width {
        return Err(Error::InvalidArgument("crop target larger than image".into()));
    }
    Ok(Vector::from_iterator(
        target.len(),
        (0..target.len()).map(|p| image[(p / target.width) * shape.width + p % target.width]),
    ))
}
