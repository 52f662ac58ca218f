//! Blur kernels used by the restoration scenarios.

/// Small 2D kernel stored row-major, anchored at its centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub height: usize,
    pub width: usize,
    pub taps: Vec<f64>,
}

impl Kernel {
    pub fn new(height: usize, width: usize, taps: Vec<f64>) -> Self {
        assert_eq!(taps.len(), height * width, "kernel taps must fill height x width");
        Self { height, width, taps }
    }

    pub fn delta() -> Self {
        Self::new(1, 1, vec![1.0])
    }

    /// `size x size` Gaussian sampled on the integer grid, normalised to sum 1.
    pub fn gaussian(size: usize, std: f64) -> Self {
        let half = (size / 2) as f64;
        let mut taps = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let (di, dj) = (i as f64 - half, j as f64 - half);
                taps.push((-(di * di + dj * dj) / (2.0 * std * std)).exp());
            }
        }
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= total);
        Self::new(size, size, taps)
    }

    pub fn uniform(size: usize) -> Self {
        let v = 1.0 / (size * size) as f64;
        Self::new(size, size, vec![v; size * size])
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }
}
