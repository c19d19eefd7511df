use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weingarten::geometry::{frame_from_rho, frame_from_u, ScalarJet2};
use weingarten::linalg::min_eigenvalue;
use weingarten::operator::{dg_t_dt, evaluate_g, inject_first_order_sign_fault, linearize_g};
use weingarten::verify::{self, operator_specs, random_convex_u_jet};
use weingarten::SpaceForm;

fn model_strategy() -> impl Strategy<Value = SpaceForm> {
    prop_oneof![Just(SpaceForm::EUCLIDEAN), Just(SpaceForm::SPHERICAL), Just(SpaceForm::HYPERBOLIC)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn formulations_agree(model in model_strategy(), n in 2usize..=3, seed in any::<u64>()) {
        let jet = random_convex_u_jet(&mut ChaCha8Rng::seed_from_u64(seed), model.u_lower(), n);
        let e = verify::formulation_errors(model, &jet).unwrap();
        prop_assert!(e <= verify::FORMULATION_TOLERANCE, "{e:e}");
    }

    #[test]
    fn operator_is_elliptic(model in model_strategy(), n in 2usize..=3, seed in any::<u64>()) {
        let jet = random_convex_u_jet(&mut ChaCha8Rng::seed_from_u64(seed), model.u_lower(), n);
        for (name, spec) in operator_specs(n) {
            let lin = linearize_g(model, &spec, &jet).unwrap();
            prop_assert!(min_eigenvalue(&lin.second_order) > 0.0, "{name}");
        }
    }

    #[test]
    fn operator_is_concave_in_the_hessian(model in model_strategy(), n in 2usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jet = random_convex_u_jet(&mut rng, model.u_lower(), n);
        let d = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let d = (&d + d.transpose()) * 0.5;
        let h = 1e-3;
        for (name, spec) in operator_specs(n) {
            let at = |s: f64| {
                let mut j = jet.clone();
                j.hessian += &d * s;
                evaluate_g(model, &spec, &j)
            };
            let (Ok(gm), Ok(g0), Ok(gp)) = (at(-h), at(0.0), at(h)) else { continue };
            let second = (gp - 2.0 * g0 + gm) / (h * h);
            prop_assert!(second <= 1e-6, "{name}: {second:e}");
        }
    }

    #[test]
    fn deformed_operator_grows_with_t(n in 2usize..=3, seed in any::<u64>(), k in 0usize..=10) {
        let jet = random_convex_u_jet(&mut ChaCha8Rng::seed_from_u64(seed), 0.0, n);
        let t = k as f64 / 10.0;
        for (name, spec) in operator_specs(n) {
            let d = dg_t_dt(t, &spec, &jet).unwrap();
            prop_assert!(d >= verify::MONOTONICITY_FLOOR, "{name}: {d:e}");
            let (_, err) = verify::t_derivative_error(&spec, &jet, t).unwrap();
            prop_assert!(err <= verify::T_DERIVATIVE_TOLERANCE, "{name}: {err:e}");
        }
    }
}

#[test]
fn constant_field_law() {
    for model in SpaceForm::all() {
        for k in 0..50 {
            let c = model.u_lower() + 0.05 + 0.1 * k as f64;
            let fq = frame_from_u(model, &ScalarJet2::constant(c, 3).unwrap()).unwrap();
            let rho = model.zeta(c).unwrap().value;
            let sphere = match model.curvature_sign() {
                0 => 1.0 / rho,
                1 => 1.0 / rho.tan(),
                _ => 1.0 / rho.tanh(),
            };
            for kappa in fq.principal_curvatures.iter() {
                assert!((kappa - c).abs() <= 1e-12 * c.max(1.0));
                assert!((kappa - sphere).abs() <= 1e-12 * c.max(1.0));
            }
            let fr = frame_from_rho(model, &ScalarJet2::constant(rho, 3).unwrap()).unwrap();
            assert!((fr.principal_curvatures[0] - c).abs() <= 1e-12 * c.max(1.0));
        }
    }
}

#[test]
fn verification_suites_pass_and_repeat() {
    let a = verify::run_all(7);
    for s in &a {
        assert!(s.passed, "{s:?}");
    }
    assert_eq!(a, verify::run_all(7));
}

#[test]
fn sign_fault_is_caught_by_the_linearization_suite() {
    inject_first_order_sign_fault(true);
    let r = verify::linearization_fd(1, 10);
    inject_first_order_sign_fault(false);
    assert!(!r.passed);
    assert!(verify::linearization_fd(1, 10).passed);
}

#[test]
fn linearization_matches_differences_for_every_curvature_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for model in SpaceForm::all() {
        for _ in 0..20 {
            let jet = random_convex_u_jet(&mut rng, model.u_lower(), 2);
            for (name, spec) in operator_specs(2) {
                let e = verify::linearization_error(model.into(), &spec, &jet).unwrap();
                assert!(e <= 1e-6, "{name}: {e:e}");
            }
        }
    }
}
