use std::path::Path;

use image::imageops::FilterType;
use image::{GrayImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::linops::Shape;
use crate::Vector;

/// Reads an 8-bit grayscale PGM, resizing to `target` when given.
pub fn read_pgm(path: &Path, target: Option<Shape>) -> Result<(Vector, Shape)> {
    let reader = ImageReader::open(path)?
        .with_guessed_format()
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    if reader.format() != Some(ImageFormat::Pnm) {
        return Err(Error::Image(format!("{}: not a PGM file", path.display())));
    }
    let img = reader.decode().map_err(|e| Error::Image(format!("{}: {e}", path.display())))?.to_luma8();
    let img = match target {
        Some(s) if (s.width as u32, s.height as u32) != img.dimensions() => {
            image::imageops::resize(&img, s.width as u32, s.height as u32, FilterType::Triangle)
        }
        _ => img,
    };
    let shape = Shape::new(img.height() as usize, img.width() as usize);
    Ok((Vector::from_iterator(shape.len(), img.into_raw().into_iter().map(f64::from)), shape))
}

/// Writes an image as binary PGM, rounding and clamping to 0..=255.
pub fn write_pgm(path: &Path, image: &Vector, shape: Shape) -> Result<()> {
    crate::error::check_len(shape.len(), image.len())?;
    let data = image.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let img = GrayImage::from_raw(shape.width as u32, shape.height as u32, data)
        .ok_or_else(|| Error::Image("buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Pnm).map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// Synthetic piecewise-smooth test scene on a `size x size` grid: a sky
/// gradient, a dark figure with a round head on a tripod, a bright
/// building and textured ground. Intensities lie in `[0, 255]`.
pub fn phantom(size: usize) -> (Vector, Shape) {
    let shape = Shape::square(size);
    let s = size as f64;
    let values = (0..shape.len()).map(|p| {
        let (v, u) = ((p / size) as f64 / s, (p % size) as f64 / s);
        // Sky and ground.
        let mut val = if v < 0.72 { 190.0 + 40.0 * v } else { 120.0 + 30.0 * (20.0 * u).sin() * (1.0 - v) };
        // Building on the right.
        if (0.72..0.9).contains(&u) && (0.45..0.72).contains(&v) {
            val = 235.0 - 60.0 * ((u - 0.72) / 0.18);
        }
        // Tripod legs.
        for (x0, slope) in [(0.32, -0.35), (0.36, 0.0), (0.40, 0.35)] {
            if v > 0.62 && v < 0.95 && (u - (x0 + slope * (v - 0.62))).abs() < 0.012 {
                val = 30.0;
            }
        }
        // Body and coat.
        if (0.38..0.62).contains(&u) && (0.32..0.75).contains(&v) {
            val = 25.0 + 25.0 * (v - 0.32);
        }
        // Head.
        if (u - 0.5).powi(2) + (v - 0.24).powi(2) < 0.085f64.powi(2) {
            val = 40.0 + 20.0 * (u - 0.5).abs() / 0.085;
        }
        // Camera.
        if (0.28..0.4).contains(&u) && (0.34..0.44).contains(&v) {
            val = 15.0;
        }
        val.clamp(0.0, 255.0)
    });
    (Vector::from_iterator(shape.len(), values), shape)
}
