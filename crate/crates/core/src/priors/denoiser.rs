use std::fmt;
use std::sync::Arc;

use super::{l2_prox, tv_prox, ProximalPrior, TvConfig};
use crate::error::{check_len, Result};
use crate::linops::Shape;
use crate::tikhonov::L2Prior;
use crate::Vector;

type DenoiseFn = dyn Fn(&Vector, f64) -> Result<Vector> + Send + Sync;

/// A Gaussian denoiser `D(z; σ)` usable as a plug-in prior.
#[derive(Clone)]
pub struct Denoiser {
    name: String,
    f: Arc<DenoiseFn>,
}

impl fmt::Debug for Denoiser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Denoiser").field("name", &self.name).finish()
    }
}

impl Denoiser {
    pub fn new(name: impl Into<String>, f: impl Fn(&Vector, f64) -> Result<Vector> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn identity() -> Self {
        Self::new("identity", |z, _| Ok(z.clone()))
    }

    /// 3x3 median filter with circular wrap; ignores the noise level.
    pub fn median3x3(shape: Shape) -> Self {
        Self::new("median", move |z, _| median3x3(z, shape))
    }

    /// The l2 prox viewed as a denoiser: `D(z; σ) = prox_{σ²s}(z)`.
    pub fn from_l2(prior: L2Prior) -> Self {
        Self::new(format!("{}-prox", prior.label()), move |z, sigma| l2_prox(z, sigma * sigma, &prior))
    }

    pub fn from_tv(shape: Shape, config: TvConfig) -> Self {
        Self::new("tv-prox", move |z, sigma| tv_prox(z, shape, sigma * sigma, &config))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn denoise(&self, z: &Vector, sigma: f64) -> Result<Vector> {
        let out = (self.f)(z, sigma)?;
        check_len(z.len(), out.len())?;
        Ok(out)
    }

    /// The prox `z ↦ D(z; √t)`.
    pub fn as_prox(&self) -> DenoiserPrior {
        DenoiserPrior(self.clone())
    }
}

/// A denoiser adapted to the proximal-prior interface.
#[derive(Debug, Clone)]
pub struct DenoiserPrior(pub Denoiser);

impl ProximalPrior for DenoiserPrior {
    fn prox(&self, z: &Vector, t: f64) -> Result<Vector> {
        self.0.denoise(z, t.sqrt())
    }

    fn value(&self, _x: &Vector) -> Option<f64> {
        None
    }

    fn name(&self) -> String {
        self.0.name.clone()
    }
}

fn median3x3(z: &Vector, shape: Shape) -> Result<Vector> {
    check_len(shape.len(), z.len())?;
    let Shape { height, width } = shape;
    let mut out = Vector::zeros(z.len());
    let mut window = [0.0; 9];
    for r in 0..height {
        for c in 0..width {
            let mut k = 0;
            for dr in [height - 1, 0, 1] {
                for dc in [width - 1, 0, 1] {
                    window[k] = z[((r + dr) % height) * width + (c + dc) % width];
                    k += 1;
                }
            }
            window.sort_by(f64::total_cmp);
            out[r * width + c] = window[4];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_removes_isolated_spike() {
        let shape = Shape::square(5);
        let mut z = Vector::from_element(25, 10.0);
        z[12] = 200.0;
        let out = Denoiser::median3x3(shape).denoise(&z, 1.0).unwrap();
        assert_eq!(out, Vector::from_element(25, 10.0));
    }

    #[test]
    fn identity_prox_is_identity() {
        let z = Vector::from_vec(vec![1.0, -3.0, 7.5]);
        for t in [1e-6, 1.0, 1e4] {
            assert_eq!(Denoiser::identity().as_prox().prox(&z, t).unwrap(), z);
        }
    }

    #[test]
    fn l2_denoiser_round_trips_prox() {
        let shape = Shape::square(4);
        let prior = L2Prior::finite_difference(shape);
        let z = Vector::from_iterator(16, (0..16).map(|i| (i as f64).sin() * 5.0));
        let sigma: f64 = 0.7;
        let t = sigma * sigma;
        let via_prox = Denoiser::from_l2(prior.clone()).as_prox().prox(&z, t).unwrap();
        assert_eq!(via_prox, l2_prox(&z, t, &prior).unwrap());
    }

    #[test]
    fn output_length_is_checked() {
        let bad = Denoiser::new("bad", |_, _| Ok(Vector::zeros(1)));
        assert!(bad.denoise(&Vector::zeros(3), 1.0).is_err());
    }
}
