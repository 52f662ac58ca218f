use std::sync::Arc;

use bpfid::linops::{Kernel, LinearOperator, Shape};
use bpfid::{FidelityTerm, Vector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn operators() -> Vec<Arc<LinearOperator>> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let shape = Shape::square(9);
    vec![
        Arc::new(LinearOperator::dense(DMatrix::from_fn(12, 20, |_, _| rng.random_range(-1.0..1.0))).unwrap()),
        Arc::new(
            LinearOperator::composite(vec![
                LinearOperator::circulant(Kernel::gaussian(7, 1.6), shape),
                LinearOperator::downsample(3, shape).unwrap(),
            ])
            .unwrap(),
        ),
        Arc::new(LinearOperator::circulant(Kernel::gaussian(3, 0.7), shape)),
    ]
}

fn terms(op: &Arc<LinearOperator>, y: &Vector) -> Vec<FidelityTerm> {
    vec![
        FidelityTerm::least_squares(op.clone(), y.clone()).unwrap(),
        FidelityTerm::back_projection(op.clone(), y.clone(), 0.0).unwrap(),
        FidelityTerm::back_projection(op.clone(), y.clone(), 0.1).unwrap(),
    ]
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for op in operators() {
        let (m, n) = op.dims();
        let y = random_vec(&mut rng, m);
        for f in terms(&op, &y) {
            let x = random_vec(&mut rng, n);
            let g = f.gradient(&x).unwrap();
            let h = 1e-5;
            for _ in 0..5 {
                let d = random_vec(&mut rng, n);
                let numeric = (f.value(&(&x + &d * h)).unwrap() - f.value(&(&x - &d * h)).unwrap()) / (2.0 * h);
                let analytic = g.dot(&d);
                assert!((numeric - analytic).abs() < 1e-5 * (1.0 + analytic.abs()), "{numeric} vs {analytic}");
            }
        }
    }
}

#[test]
fn default_step_decreases_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for op in operators() {
        let (m, n) = op.dims();
        let y = random_vec(&mut rng, m);
        for f in terms(&op, &y) {
            let x = random_vec(&mut rng, n);
            let next = &x - f.gradient(&x).unwrap() * f.step_size();
            assert!(f.value(&next).unwrap() < f.value(&x).unwrap());
        }
    }
}

#[test]
fn values_follow_the_singular_weighting() {
    // LS weights residual components by 1, BP by 1/λᵢ².
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for op in operators() {
        let a = op.materialize().unwrap();
        let svd = a.clone().svd(true, false);
        let u = svd.u.unwrap();
        let (m, n) = op.dims();
        let y = random_vec(&mut rng, m);
        let x = random_vec(&mut rng, n);
        let r = &y - &a * &x;
        let proj = u.tr_mul(&r);
        let ls: f64 = 0.5 * proj.iter().map(|c| c * c).sum::<f64>();
        let bp: f64 = 0.5 * proj.iter().zip(svd.singular_values.iter()).map(|(c, s)| c * c / (s * s)).sum::<f64>();
        let ours = terms(&op, &y);
        assert!((ours[0].value(&x).unwrap() - ls).abs() < 1e-9 * ls);
        assert!((ours[1].value(&x).unwrap() - bp).abs() < 1e-7 * bp);
    }
}

#[test]
fn rejects_mismatched_observations() {
    let op = Arc::new(LinearOperator::identity(4));
    assert!(FidelityTerm::least_squares(op.clone(), Vector::zeros(3)).is_err());
    assert!(FidelityTerm::back_projection(op, Vector::zeros(5), 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inpainting_fidelities_coincide(seed in 0u64..10_000, keep in 0.05f64..1.0) {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kept: Vec<usize> = (0..n).filter(|_| rng.random_bool(keep)).collect();
        prop_assume!(!kept.is_empty());
        let op = Arc::new(LinearOperator::inpaint(kept, n).unwrap());
        let y = Vector::from_fn(op.dims().0, |_, _| rng.random_range(0.0..255.0));
        let x = Vector::from_fn(n, |_, _| rng.random_range(0.0..255.0));
        let ls = FidelityTerm::least_squares(op.clone(), y.clone()).unwrap();
        let bp = FidelityTerm::back_projection(op, y, 0.0).unwrap();
        prop_assert_eq!(ls.value(&x).unwrap(), bp.value(&x).unwrap());
        prop_assert_eq!(ls.gradient(&x).unwrap(), bp.gradient(&x).unwrap());
    }
}

#[test]
fn noiseless_weighting_in_right_singular_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let a = DMatrix::from_fn(4, 8, |_, _| rng.random_range(-1.0..1.0));
        let svd = a.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let op = Arc::new(LinearOperator::dense(a.clone()).unwrap());
        let x0 = random_vec(&mut rng, 8);
        let x = random_vec(&mut rng, 8);
        let y = &a * &x0;
        let c = &vt * (&x0 - &x);
        let bp: f64 = 0.5 * c.iter().map(|c| c * c).sum::<f64>();
        let ls: f64 = 0.5 * c.iter().zip(svd.singular_values.iter()).map(|(c, s)| s * s * c * c).sum::<f64>();
        let ours_ls = FidelityTerm::least_squares(op.clone(), y.clone()).unwrap().value(&x).unwrap();
        let ours_bp = FidelityTerm::back_projection(op, y, 0.0).unwrap().value(&x).unwrap();
        assert!((ours_ls - ls).abs() < 1e-8 * (1.0 + ls));
        assert!((ours_bp - bp).abs() < 1e-8 * (1.0 + bp));
    }
}
