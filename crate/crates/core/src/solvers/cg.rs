//! Conjugate gradients for symmetric positive definite systems.

use crate::error::{check_len, Error, Result};
use crate::Vector;

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vector,
    /// Relative residuals `‖b − Ax_k‖ / ‖b‖`, starting with the initial guess.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `Ax = b` for an SPD map `apply`, stopping when the relative
/// residual drops to `tol` or after `max_iter` iterations.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&Vector) -> Result<Vector>,
    b: &Vector,
    x0: &Vector,
    max_iter: usize,
    tol: f64,
) -> Result<CgOutcome> {
    check_len(b.len(), x0.len())?;
    let b_norm = b.norm();
    if !b_norm.is_finite() {
        return Err(Error::Numerical("conjugate gradient right-hand side"));
    }
    if b_norm == 0.0 {
        return Ok(CgOutcome { solution: Vector::zeros(b.len()), residuals: vec![0.0], iterations: 0, converged: true });
    }
    let mut x = x0.clone();
    let mut r = if x0.iter().all(|&v| v == 0.0) { b.clone() } else { b - apply(&x)? };
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut residuals = vec![rr.sqrt() / b_norm];
    if residuals[0] <= tol {
        return Ok(CgOutcome { solution: x, residuals, iterations: 0, converged: true });
    }
    for k in 1..=max_iter {
        let ap = apply(&p)?;
        let curvature = p.dot(&ap);
        if !curvature.is_finite() {
            return Err(Error::Numerical("conjugate gradient"));
        }
        if curvature <= 0.0 {
            // Exhausted the Krylov space (or the map is not SPD on it).
            return Ok(CgOutcome { solution: x, residuals, iterations: k - 1, converged: false });
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_next = r.norm_squared();
        let rel = rr_next.sqrt() / b_norm;
        if !rel.is_finite() {
            return Err(Error::Numerical("conjugate gradient"));
        }
        residuals.push(rel);
        if rel <= tol {
            return Ok(CgOutcome { solution: x, residuals, iterations: k, converged: true });
        }
        p = &r + &p * (rr_next / rr);
        rr = rr_next;
    }
    Ok(CgOutcome { solution: x, residuals, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = Vector::from_column_slice(&[1.0, -2.0, 3.0]);
        let out = conjugate_gradient(|v| Ok(v.clone()), &b, &Vector::zeros(3), 10, 1e-14).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        assert_eq!(out.solution, b);
    }

    #[test]
    fn random_spd_matches_dense_solve_within_n_iterations() {
        let a = random_spd(8, 11);
        let b = Vector::from_fn(8, |i, _| (i as f64 + 1.0).ln());
        let exact = a.clone().lu().solve(&b).unwrap();
        let out = conjugate_gradient(|v| Ok(&a * v), &b, &Vector::zeros(8), 8, 1e-13).unwrap();
        assert!(out.iterations <= 8);
        assert!((out.solution - exact).norm() <= 1e-8 * b.norm().max(1.0));
    }

    #[test]
    fn energy_norm_error_is_non_increasing() {
        let a = random_spd(12, 5);
        let b = Vector::from_fn(12, |i, _| (i as f64).sin());
        let exact = a.clone().lu().solve(&b).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=12 {
            let out = conjugate_gradient(|v| Ok(&a * v), &b, &Vector::zeros(12), k, 0.0).unwrap();
            let e = &out.solution - &exact;
            let energy = e.dot(&(&a * &e)).sqrt();
            assert!(energy <= prev * (1.0 + 1e-12) + 1e-14, "k = {k}: {energy} > {prev}");
            prev = energy;
        }
    }

    #[test]
    fn nan_is_reported() {
        let b = Vector::from_column_slice(&[1.0, 1.0]);
        let err = conjugate_gradient(|v| Ok(v * f64::NAN), &b, &Vector::zeros(2), 5, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn cap_without_convergence_is_flagged() {
        let a = random_spd(10, 2);
        let b = Vector::from_element(10, 1.0);
        let out = conjugate_gradient(|v| Ok(&a * v), &b, &Vector::zeros(10), 2, 1e-14).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
        assert_eq!(out.residuals.len(), 3);
    }
}
