use crate::error::{Error, Result};
use crate::fidelity::FidelityTerm;
use crate::harness::psnr;
use crate::priors::ProximalPrior;
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// The fidelity's own step: 1 for BP, `1/(1.01 λ̂₁²)` for LS.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Momentum {
    /// Plain proximal gradient (ISTA).
    None,
    /// FISTA extrapolation with `t₊ = (1 + √(1 + 4t²)) / 2`.
    Nesterov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxStepConfig {
    pub step: StepSize,
    pub beta: f64,
    pub iters: usize,
    pub momentum: Momentum,
    pub record_trace: bool,
}

impl ProxStepConfig {
    pub fn ista(beta: f64, iters: usize) -> Self {
        Self { step: StepSize::Auto, beta, iters, momentum: Momentum::None, record_trace: false }
    }

    pub fn fista(beta: f64, iters: usize) -> Self {
        Self { momentum: Momentum::Nesterov, ..Self::ista(beta, iters) }
    }

    pub fn with_step(mut self, mu: f64) -> Self {
        self.step = StepSize::Fixed(mu);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    fn resolve_step(&self, fid: &FidelityTerm) -> Result<f64> {
        let mu = match self.step {
            StepSize::Auto => fid.step_size(),
            StepSize::Fixed(mu) => mu,
        };
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("step size must be finite and > 0, got {mu}")));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {}", self.beta)));
        }
        Ok(mu)
    }
}

/// Per-iteration diagnostics; empty vectors when not recorded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterTrace {
    /// `ℓ(x_k) + β s(x_k)`; NaN when the prior has no explicit value.
    pub objective: Vec<f64>,
    /// PSNR against the ground truth, when one is supplied.
    pub psnr: Vec<f64>,
    /// `‖x_k − x_{k−1}‖`.
    pub residual: Vec<f64>,
}

impl IterTrace {
    pub(crate) fn record(
        &mut self,
        objective: impl FnOnce() -> Result<f64>,
        x: &Vector,
        prev: &Vector,
        truth: Option<&Vector>,
    ) -> Result<()> {
        self.objective.push(objective()?);
        if let Some(truth) = truth {
            self.psnr.push(psnr(x, truth)?);
        }
        self.residual.push((x - prev).norm());
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ProxOutcome {
    pub solution: Vector,
    pub trace: IterTrace,
    pub step: f64,
}

/// ISTA/FISTA on `ℓ(x) + β s(x)`:
/// `x_k = prox_{μβs}(v_{k−1} − μ∇ℓ(v_{k−1}))`.
pub fn prox_gradient(
    fid: &FidelityTerm,
    prior: &dyn ProximalPrior,
    cfg: &ProxStepConfig,
    x0: &Vector,
    truth: Option<&Vector>,
) -> Result<ProxOutcome> {
    prox_gradient_with(fid, prior, cfg, x0, truth, |_, _| {})
}

/// [`prox_gradient`] with a callback receiving each iterate `x_k` (`k ≥ 1`).
pub fn prox_gradient_with(
    fid: &FidelityTerm,
    prior: &dyn ProximalPrior,
    cfg: &ProxStepConfig,
    x0: &Vector,
    truth: Option<&Vector>,
    mut on_iter: impl FnMut(usize, &Vector),
) -> Result<ProxOutcome> {
    let mu = cfg.resolve_step(fid)?;
    let scale = mu * cfg.beta;
    let mut trace = IterTrace::default();
    let mut x = x0.clone();
    let mut v = x0.clone();
    let mut t = 1.0f64;
    let objective = |x: &Vector| -> Result<f64> {
        let s = prior.value(x).unwrap_or(f64::NAN);
        Ok(fid.value(x)? + cfg.beta * s)
    };
    for k in 1..=cfg.iters {
        let grad = fid.gradient(&v)?;
        let next = prior.prox(&(&v - grad * mu), scale)?;
        if next.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numerical("proximal gradient iterate"));
        }
        if cfg.record_trace {
            trace.record(|| objective(&next), &next, &x, truth)?;
        }
        v = match cfg.momentum {
            Momentum::None => next.clone(),
            Momentum::Nesterov => {
                let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
                let v = &next + (&next - &x) * ((t - 1.0) / t_next);
                t = t_next;
                v
            }
        };
        x = next;
        on_iter(k, &x);
    }
    Ok(ProxOutcome { solution: x, trace, step: mu })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linops::LinearOperator;
    use crate::priors::ZeroPrior;
    use crate::tikhonov::{solve_bp_closed, solve_ls_closed, L2Prior};
    use nalgebra::DMatrix;

    fn op() -> Arc<LinearOperator> {
        Arc::new(
            LinearOperator::dense(DMatrix::from_row_slice(
                3,
                5,
                &[1.0, 0.5, -0.3, 0.0, 0.2, 0.0, 1.2, 0.4, -0.6, 0.1, 0.3, -0.2, 0.9, 0.5, -1.0],
            ))
            .unwrap(),
        )
    }

    #[test]
    fn fista_reaches_closed_form() {
        let op = op();
        let y = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let x0 = Vector::zeros(5);
        let beta = 0.3;
        let ls = FidelityTerm::least_squares(op.clone(), y.clone()).unwrap();
        let out = prox_gradient(&ls, &L2Prior::Identity, &ProxStepConfig::fista(beta, 500), &x0, None).unwrap();
        let closed = solve_ls_closed(&op, &y, beta, &L2Prior::Identity).unwrap();
        assert!((out.solution - closed).amax() < 1e-6);
        let bp = FidelityTerm::back_projection(op.clone(), y.clone(), 0.0).unwrap();
        let out = prox_gradient(&bp, &L2Prior::Identity, &ProxStepConfig::fista(beta, 500), &x0, None).unwrap();
        assert_eq!(out.step, 1.0);
        let closed = solve_bp_closed(&op, &y, beta, 0.0, &L2Prior::Identity).unwrap();
        assert!((out.solution - closed).amax() < 1e-6);
    }

    #[test]
    fn zero_prior_drives_gradient_to_zero() {
        let op = op();
        let y = Vector::from_vec(vec![0.3, 0.1, -0.7]);
        let ls = FidelityTerm::least_squares(op, y).unwrap();
        let out = prox_gradient(&ls, &ZeroPrior, &ProxStepConfig::fista(1.0, 3000), &Vector::zeros(5), None).unwrap();
        assert!(ls.gradient(&out.solution).unwrap().norm() <= 1e-6);
    }

    #[test]
    fn ista_objective_is_monotone() {
        let op = op();
        let y = Vector::from_vec(vec![2.0, -1.0, 0.4]);
        let ls = FidelityTerm::least_squares(op, y).unwrap();
        let cfg = ProxStepConfig::ista(0.5, 50).with_trace();
        let out = prox_gradient(&ls, &L2Prior::Identity, &cfg, &Vector::zeros(5), None).unwrap();
        assert_eq!(out.trace.objective.len(), 50);
        for w in out.trace.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_step() {
        let ls = FidelityTerm::least_squares(op(), Vector::zeros(3)).unwrap();
        let cfg = ProxStepConfig::ista(1.0, 1).with_step(-1.0);
        assert!(prox_gradient(&ls, &ZeroPrior, &cfg, &Vector::zeros(5), None).is_err());
    }
}
