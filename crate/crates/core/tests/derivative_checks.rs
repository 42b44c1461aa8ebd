//! Finite-difference verification of the closed-form derivatives, expansion
//! orders of the retraction and of the objective along the feasible curve,
//! and projector identities, across all four constraint-form variants.

use beigen::{
    fd_check_gradient, fd_check_hessian, gen_bform, gen_tensor, projector, random_feasible,
    residual, solve, BFamily, BForm, BGenSpec, GenSpec, Objective, Sense, SolveConfig, SymTensor,
    TensorFamily,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One instance per constraint-form variant, plus the two fixed tensors.
fn variant_instances(dim: usize, seed: u64) -> Vec<Objective> {
    let a3 = gen_tensor(&GenSpec::new(TensorFamily::RandSym, 3, dim, seed)).unwrap();
    let a4 = gen_tensor(&GenSpec::new(TensorFamily::RandSym, 4, dim, seed + 1)).unwrap();
    let quad = gen_bform(&BGenSpec::new(BFamily::RandQuad { border: 2, seed }, dim)).unwrap();
    let quad4 = gen_bform(&BGenSpec::new(BFamily::RandQuad { border: 4, seed }, dim)).unwrap();
    let dense =
        gen_bform(&BGenSpec::new(BFamily::DiagDom { border: 4, seed }, dim)).unwrap();
    vec![
        Objective::new(a3.clone(), BForm::identity(), Sense::Minimize).unwrap(),
        Objective::new(a4.clone(), BForm::diag_power(4).unwrap(), Sense::Maximize).unwrap(),
        Objective::new(a3, quad, Sense::Maximize).unwrap(),
        Objective::new(a4.clone(), quad4, Sense::Minimize).unwrap(),
        Objective::new(a4, dense, Sense::Maximize).unwrap(),
    ]
}

#[test]
fn gradient_matches_finite_differences_across_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for obj in variant_instances(4, 5) {
        for _ in 0..3 {
            let x = random_feasible(obj.bform(), 4, &mut rng).unwrap();
            let err = fd_check_gradient(&obj, &x, 1e-5).unwrap();
            assert!(err <= 1e-5, "gradient error {err:.3e}");
        }
    }
}

#[test]
fn hessian_matches_finite_differences_across_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for obj in variant_instances(4, 6) {
        for _ in 0..2 {
            let x = random_feasible(obj.bform(), 4, &mut rng).unwrap();
            let err = fd_check_hessian(&obj, &x, 1e-5).unwrap();
            assert!(err <= 1e-4, "hessian error {err:.3e}");
        }
    }
}

#[test]
fn fixed_instances_pass_derivative_checks() {
    let t3 = gen_tensor(&GenSpec::new(TensorFamily::Fixed33, 0, 0, 0)).unwrap();
    let obj3 = Objective::new(t3, BForm::identity(), Sense::Maximize).unwrap();
    let t4 = gen_tensor(&GenSpec::new(TensorFamily::Fixed43, 0, 0, 0)).unwrap();
    let obj4 = Objective::new(t4, BForm::diag_power(4).unwrap(), Sense::Maximize).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for obj in [obj3, obj4] {
        let x = random_feasible(obj.bform(), 3, &mut rng).unwrap();
        assert!(fd_check_gradient(&obj, &x, 1e-5).unwrap() <= 1e-5);
        assert!(fd_check_hessian(&obj, &x, 1e-5).unwrap() <= 1e-4);
    }
}

#[test]
fn objective_expansion_along_the_curve_is_second_order() {
    // h(x(alpha)) = h + alpha F.d + alpha^2/2 d^T H d + o(alpha^2); the
    // remainder must shrink like alpha^3 between alpha = 1e-2 and 1e-3.
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut checked = 0;
    for seed in 0..4u64 {
        for obj in variant_instances(4, 40 + seed) {
            let x = random_feasible(obj.bform(), 4, &mut rng).unwrap();
            let grad = obj.feas_grad(&x).unwrap();
            let dir = DVector::from_fn(4, |_, _| rng.random_range(-1.0..=1.0_f64));
            let fd = grad.dot(&dir);
            let dhd = obj.feas_hess_quad(&x, &dir).unwrap();
            let h0 = obj.h_eval(&x).unwrap();
            let remainder = |alpha: f64| {
                let y = obj.bform().retract(&x, &dir, alpha).unwrap();
                (obj.h_eval(&y).unwrap() - h0 - alpha * fd - 0.5 * alpha * alpha * dhd).abs()
            };
            let coarse = remainder(1e-2);
            let fine = remainder(1e-3);
            // Skip degenerate draws where the cubic term is below noise.
            if coarse < 1e-12 * (1.0 + h0.abs()) {
                continue;
            }
            assert!(
                fine <= 0.05 * coarse,
                "remainder did not shrink cubically: {coarse:.3e} -> {fine:.3e}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 15, "only {checked} non-degenerate draws");
}

#[test]
fn retraction_first_order_expansion() {
    // x(alpha) = x + alpha P(x) d + o(alpha): the deviation divided by alpha
    // must shrink linearly in alpha.
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for obj in variant_instances(4, 50) {
        let b = obj.bform();
        let x = random_feasible(b, 4, &mut rng).unwrap();
        let dir = DVector::from_fn(4, |_, _| rng.random_range(-1.0..=1.0_f64));
        let p = projector(b, &x).unwrap();
        let pd = &p * &dir;
        let deviation = |alpha: f64| {
            let y = b.retract(&x, &dir, alpha).unwrap();
            (y - &x - &pd * alpha).norm() / alpha
        };
        // The deviation is O(alpha^2), so dividing by alpha leaves a factor
        // that shrinks like alpha itself: one decade per decade.
        let d2 = deviation(1e-2);
        let d3 = deviation(1e-3);
        let d4 = deviation(1e-4);
        assert!(d3 <= 0.2 * d2 + 1e-12, "d2 {d2:.3e} d3 {d3:.3e}");
        assert!(d4 <= 0.2 * d3 + 1e-12, "d3 {d3:.3e} d4 {d4:.3e}");
    }
}

#[test]
fn retraction_stays_feasible_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for obj in variant_instances(4, 60) {
        let b = obj.bform();
        for _ in 0..20 {
            let x = random_feasible(b, 4, &mut rng).unwrap();
            let dir = DVector::from_fn(4, |_, _| rng.random_range(-2.0..=2.0_f64));
            let alpha = rng.random_range(0.0..=3.0_f64);
            let y = b.retract(&x, &dir, alpha).unwrap();
            assert!((b.phi(&y).unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn projector_is_idempotent_across_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for obj in variant_instances(4, 70) {
        let b = obj.bform();
        let x = random_feasible(b, 4, &mut rng).unwrap();
        let p = projector(b, &x).unwrap();
        assert!((&p * &p - &p).norm() <= 1e-12 * (1.0 + p.norm()));
        assert!((&p * &x).norm() <= 1e-12 * (1.0 + x.norm()));
    }
}

#[test]
fn small_feasible_gradient_implies_small_residual() {
    // Exact critical point: an axis of a diagonal tensor.
    let t = SymTensor::dense_from_entries(
        4,
        3,
        (0..3).map(|i| (vec![i + 1; 4], 0.5 + i as f64)),
    )
    .unwrap();
    let obj = Objective::new(t, BForm::identity(), Sense::Minimize).unwrap();
    let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    assert!(obj.feas_grad(&e1).unwrap().norm() <= 1e-10);
    assert!(residual(&obj, &e1).unwrap() <= 1e-8);

    // Converged solver outputs satisfy the same link.
    let t = gen_tensor(&GenSpec::new(TensorFamily::Fixed33, 0, 0, 0)).unwrap();
    let obj = Objective::new(t, BForm::identity(), Sense::Maximize).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    let x0 = random_feasible(obj.bform(), 3, &mut rng).unwrap();
    let r = solve(&obj, &x0, &SolveConfig::default()).unwrap();
    assert!(r.converged);
    let grad_norm = obj.feas_grad(&r.eigenpair.x).unwrap().norm();
    if grad_norm <= 1e-10 {
        assert!(residual(&obj, &r.eigenpair.x).unwrap() <= 1e-8);
    }
}

#[test]
fn maximize_equals_minimize_of_negation_bit_for_bit() {
    let t = gen_tensor(&GenSpec::new(TensorFamily::RandSym, 3, 5, 9)).unwrap();
    let neg = t.scaled(-1.0);
    let max_obj = Objective::new(t, BForm::identity(), Sense::Maximize).unwrap();
    let min_obj = Objective::new(neg, BForm::identity(), Sense::Minimize).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let x0 = random_feasible(max_obj.bform(), 5, &mut rng).unwrap();
    let cfg = SolveConfig::default();
    let a = solve(&max_obj, &x0, &cfg).unwrap();
    let b = solve(&min_obj, &x0, &cfg).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.eigenpair.x, b.eigenpair.x);
    assert_eq!(a.eigenpair.lambda, -b.eigenpair.lambda);
}
