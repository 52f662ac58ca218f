use std::sync::Arc;

use super::prox::{prox_gradient_with, IterTrace, ProxOutcome, ProxStepConfig};
use crate::error::{check_len, Error, Result};
use crate::fidelity::FidelityTerm;
use crate::linops::{LinearOperator, PseudoInverse};
use crate::priors::Denoiser;
use crate::Vector;

/// Default `δ` for noiseless observations (on a 0..255 intensity scale).
pub const DEFAULT_NOISELESS_DELTA: f64 = 1e-3 * 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdbpConfig {
    pub sigma_e: f64,
    pub delta: f64,
    pub iters: usize,
    pub eps: f64,
    pub record_trace: bool,
}

impl IdbpConfig {
    /// `δ = 0` for noisy observations, [`DEFAULT_NOISELESS_DELTA`] otherwise.
    pub fn new(sigma_e: f64, iters: usize) -> Self {
        let delta = if sigma_e > 0.0 { 0.0 } else { DEFAULT_NOISELESS_DELTA };
        Self { sigma_e, delta, iters, eps: 0.0, record_trace: false }
    }

    /// Denoising level `σ_e + δ`.
    pub fn noise_level(&self) -> f64 {
        self.sigma_e + self.delta
    }

    /// Equivalent BP regularisation weight `(σ_e + δ)²`.
    pub fn equivalent_beta(&self) -> f64 {
        let s = self.noise_level();
        s * s
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_e >= 0.0) || !(self.delta >= 0.0) || !(self.noise_level() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need sigma_e >= 0, delta >= 0 and sigma_e + delta > 0, got {} and {}",
                self.sigma_e, self.delta
            )));
        }
        Ok(())
    }
}

/// IDBP: `z_k = x_{k−1} + A†(y − Ax_{k−1})`, `x_k = D(z_k; σ_e + δ)`.
pub fn idbp(
    op: Arc<LinearOperator>,
    y: &Vector,
    denoiser: &Denoiser,
    cfg: &IdbpConfig,
    x0: &Vector,
    truth: Option<&Vector>,
) -> Result<ProxOutcome> {
    let pinv = PseudoInverse::new(op, cfg.eps)?;
    idbp_with(&pinv, y, denoiser, cfg, x0, truth, |_, _| {})
}

/// [`idbp`] with a prepared pseudo-inverse and a per-iterate callback.
pub fn idbp_with(
    pinv: &PseudoInverse,
    y: &Vector,
    denoiser: &Denoiser,
    cfg: &IdbpConfig,
    x0: &Vector,
    truth: Option<&Vector>,
    mut on_iter: impl FnMut(usize, &Vector),
) -> Result<ProxOutcome> {
    cfg.validate()?;
    let op = pinv.op();
    let (m, n) = op.dims();
    check_len(m, y.len())?;
    check_len(n, x0.len())?;
    let level = cfg.noise_level();
    let mut trace = IterTrace::default();
    let mut x = x0.clone();
    for k in 1..=cfg.iters {
        let back = pinv.apply(&(y - op.apply(&x)?))?;
        let z = &x + back;
        let next = denoiser.denoise(&z, level)?;
        if cfg.record_trace {
            let fid_value = || -> Result<f64> {
                let r = y - op.apply(&next)?;
                Ok(0.5 * r.dot(&pinv.gram_solve(&r)?))
            };
            trace.record(fid_value, &next, &x, truth)?;
        }
        x = next;
        on_iter(k, &x);
    }
    Ok(ProxOutcome { solution: x, trace, step: 1.0 })
}

/// Runs IDBP and ISTA on the BP fidelity with `β = (σ_e + δ)²`, `μ = 1`
/// and the denoiser as prox, sharing one pseudo-inverse, and returns the
/// largest `‖x_k^IDBP − x_k^ISTA‖∞` over all iterations.
pub fn equivalence_check(
    op: Arc<LinearOperator>,
    y: &Vector,
    denoiser: &Denoiser,
    cfg: &IdbpConfig,
    x0: &Vector,
) -> Result<f64> {
    let cfg = IdbpConfig { record_trace: false, ..*cfg };
    if cfg.iters == 0 {
        return Ok(0.0);
    }
    let pinv = PseudoInverse::new(op, cfg.eps)?;
    let mut idbp_iterates = Vec::with_capacity(cfg.iters);
    idbp_with(&pinv, y, denoiser, &cfg, x0, None, |_, x| idbp_iterates.push(x.clone()))?;
    let fid = FidelityTerm::back_projection_with(pinv, y.clone())?;
    let ista = ProxStepConfig::ista(cfg.equivalent_beta(), cfg.iters).with_step(1.0);
    let mut deviation = 0.0f64;
    prox_gradient_with(&fid, &denoiser.as_prox(), &ista, x0, None, |k, x| {
        deviation = deviation.max((x - &idbp_iterates[k - 1]).amax());
    })?;
    Ok(deviation)
}
