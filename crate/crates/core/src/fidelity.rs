//! The least-squares and back-projection data terms.

use std::sync::Arc;

use crate::error::{check_len, Result};
use crate::linops::{sq_spectral_norm, LinearOperator, PseudoInverse};
use crate::Vector;

/// Safety factor applied to power-method Lipschitz estimates.
pub const LIPSCHITZ_MARGIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FidelityKind {
    /// `½‖y − Ax‖²`
    LeastSquares,
    /// `½‖A†y − A†Ax‖²`, loaded by `ε`
    BackProjection { eps: f64 },
}

impl FidelityKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::LeastSquares => "ls",
            Self::BackProjection { .. } => "bp",
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            Self::LeastSquares => 0.0,
            Self::BackProjection { eps } => *eps,
        }
    }
}

/// A fidelity term bound to an operator and an observation vector.
#[derive(Debug, Clone)]
pub struct FidelityTerm {
    kind: FidelityKind,
    op: Arc<LinearOperator>,
    y: Vector,
    pinv: Option<PseudoInverse>,
    pinv_y: Option<Vector>,
    lipschitz: f64,
}

impl FidelityTerm {
    pub fn least_squares(op: Arc<LinearOperator>, y: Vector) -> Result<Self> {
        let lipschitz = ls_lipschitz(&op)?;
        Self::least_squares_with_lipschitz(op, y, lipschitz)
    }

    /// LS term with a precomputed `λ₁²` (shared across the cells of a sweep).
    pub fn least_squares_with_lipschitz(op: Arc<LinearOperator>, y: Vector, lipschitz: f64) -> Result<Self> {
        check_len(op.dims().0, y.len())?;
        Ok(Self { kind: FidelityKind::LeastSquares, op, y, pinv: None, pinv_y: None, lipschitz })
    }

    pub fn back_projection(op: Arc<LinearOperator>, y: Vector, eps: f64) -> Result<Self> {
        Self::back_projection_with(PseudoInverse::new(op, eps)?, y)
    }

    /// BP term reusing an already prepared pseudo-inverse.
    pub fn back_projection_with(pinv: PseudoInverse, y: Vector) -> Result<Self> {
        let op = pinv.op().clone();
        check_len(op.dims().0, y.len())?;
        let pinv_y = pinv.apply(&y)?;
        Ok(Self {
            kind: FidelityKind::BackProjection { eps: pinv.eps() },
            op,
            y,
            pinv: Some(pinv),
            pinv_y: Some(pinv_y),
            // ‖P_A‖ = 1, and the loaded projector has norm λ₁²/(λ₁²+ε) < 1.
            lipschitz: 1.0,
        })
    }

    /// Rebuilds a BP term with a new loading, refreshing the cached `A†y`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        match &self.pinv {
            Some(pinv) => Self::back_projection_with(pinv.with_eps(eps)?, self.y.clone()),
            None => Ok(self.clone()),
        }
    }

    pub fn kind(&self) -> FidelityKind {
        self.kind
    }

    pub fn op(&self) -> &Arc<LinearOperator> {
        &self.op
    }

    pub fn observations(&self) -> &Vector {
        &self.y
    }

    pub fn pinv(&self) -> Option<&PseudoInverse> {
        self.pinv.as_ref()
    }

    /// Cached `A_ε†y` (BP only).
    pub fn back_projected_observations(&self) -> Option<&Vector> {
        self.pinv_y.as_ref()
    }

    /// LS: `½‖y − Ax‖²`; BP: `½ rᵀ(AAᵀ + εI)⁻¹r` with `r = y − Ax`, which is
    /// `½‖A†y − A†Ax‖²` at `ε = 0` and keeps the gradient exact for `ε > 0`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        let residual = &self.y - self.op.apply(x)?;
        match &self.pinv {
            Some(pinv) => Ok(0.5 * residual.dot(&pinv.gram_solve(&residual)?)),
            None => Ok(0.5 * residual.dot(&residual)),
        }
    }

    /// LS: `−Aᵀ(y − Ax)`; BP: `−A_ε†(y − Ax)`.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        let residual = &self.y - self.op.apply(x)?;
        let back = match &self.pinv {
            Some(pinv) => pinv.apply(&residual)?,
            None => self.op.adjoint(&residual)?,
        };
        Ok(-back)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Default proximal-gradient step: 1 for BP, `1/(1.01 λ̂₁²)` for LS.
    pub fn step_size(&self) -> f64 {
        match self.kind {
            FidelityKind::BackProjection { .. } => 1.0 / self.lipschitz,
            FidelityKind::LeastSquares => 1.0 / (LIPSCHITZ_MARGIN * self.lipschitz),
        }
    }
}

/// `λ₁²` of the operator: exact for circulant and row-orthonormal
/// operators, power method otherwise.
pub fn ls_lipschitz(op: &LinearOperator) -> Result<f64> {
    if op.has_orthonormal_rows() {
        return Ok(1.0);
    }
    if let Some(diag) = op.fourier_diagonal() {
        return Ok(diag.symbol.iter().map(|h| h.norm_sqr()).fold(0.0, f64::max));
    }
    Ok(sq_spectral_norm(op, 1000, 1e-12)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn diag_op(d: &[f64]) -> Arc<LinearOperator> {
        Arc::new(LinearOperator::dense(DMatrix::from_diagonal(&Vector::from_column_slice(d))).unwrap())
    }

    #[test]
    fn diagonal_example_values() {
        let op = diag_op(&[1.0, 2.0]);
        let y = Vector::from_column_slice(&[1.0, 2.0]);
        let x = Vector::zeros(2);
        let ls = FidelityTerm::least_squares(op.clone(), y.clone()).unwrap();
        let bp = FidelityTerm::back_projection(op, y, 0.0).unwrap();
        assert!((ls.value(&x).unwrap() - 2.5).abs() < 1e-12);
        assert!((bp.value(&x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consistent_observations_give_zero_value_and_gradient() {
        let op = Arc::new(LinearOperator::dense(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0])).unwrap());
        let x = Vector::from_column_slice(&[0.3, -1.0, 2.0]);
        let y = op.apply(&x).unwrap();
        for f in [
            FidelityTerm::least_squares(op.clone(), y.clone()).unwrap(),
            FidelityTerm::back_projection(op.clone(), y.clone(), 0.0).unwrap(),
        ] {
            assert!(f.value(&x).unwrap() < 1e-20);
            assert!(f.gradient(&x).unwrap().amax() < 1e-12);
        }
    }

    #[test]
    fn lipschitz_constants() {
        let y = Vector::zeros(2);
        let bp = FidelityTerm::back_projection(diag_op(&[3.0, 4.0]), y.clone(), 0.0).unwrap();
        assert_eq!(bp.lipschitz(), 1.0);
        assert_eq!(bp.step_size(), 1.0);
        let ls = FidelityTerm::least_squares(diag_op(&[3.0, 4.0]), y.clone()).unwrap();
        assert!((ls.lipschitz() - 16.0).abs() < 1e-9);
        let id = FidelityTerm::least_squares(Arc::new(LinearOperator::identity(2)), y).unwrap();
        assert_eq!(id.lipschitz(), 1.0);
    }

    #[test]
    fn eps_change_refreshes_cached_back_projection() {
        let op = diag_op(&[1.0, 2.0]);
        let y = Vector::from_column_slice(&[1.0, 2.0]);
        let bp = FidelityTerm::back_projection(op, y, 0.0).unwrap();
        let loaded = bp.with_eps(1.0).unwrap();
        assert_eq!(loaded.kind(), FidelityKind::BackProjection { eps: 1.0 });
        // Aᵀ(AAᵀ+I)⁻¹y = (1/2, 4/5)
        let cached = loaded.back_projected_observations().unwrap();
        assert!((cached[0] - 0.5).abs() < 1e-12 && (cached[1] - 0.8).abs() < 1e-12);
        // ½ yᵀ(AAᵀ+I)⁻¹y = ½(1/2 + 4/5)
        assert!((loaded.value(&Vector::zeros(2)).unwrap() - 0.65).abs() < 1e-12);
    }
}
