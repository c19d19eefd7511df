use std::f64::consts::PI;

use nalgebra::Vector3;

use weingarten::curvature::CurvatureFunction;
use weingarten::discretization::{AnalyticField, DiscreteField, DiscreteOperator, PolarDomain};
use weingarten::expr::{Expression, Var};
use weingarten::solver::*;
use weingarten::{Ambient, Error, SpaceForm};

const VARS: [Var; 6] = [Var::Y1, Var::Y2, Var::Z1, Var::Z2, Var::Z3, Var::U];

fn disk(n_r: usize, n_theta: usize) -> PolarDomain {
    PolarDomain::build(Vector3::z(), PI / 5.0, n_r, n_theta).unwrap()
}

fn exact_sub(d: &PolarDomain, text: &str) -> Subsolution {
    let f = AnalyticField::gnomonic(&Expression::parse(text, &VARS).unwrap(), &d.chart).unwrap();
    Subsolution {
        field: DiscreteField::from_u(d, |n| f.u(n.y)),
        exact_jets: Some(d.nodes().iter().map(|n| f.frame_jet(n.y)).collect()),
    }
}

fn constant_rhs(c: f64) -> impl Fn(usize, f64) -> weingarten::Result<(f64, f64)> + Sync {
    move |_, _| Ok((c, 0.0))
}

#[test]
fn newton_takes_no_step_at_a_fixed_point() {
    let d = disk(9, 16);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let op = DiscreteOperator { domain: &d, ambient: SpaceForm::EUCLIDEAN.into(), spec: &spec };
    let field = DiscreteField::from_u(&d, |_| 1.0);
    let g = op.operator_values(&field).unwrap();
    let rhs = move |i: usize, _: f64| Ok((g[i], 0.0));
    let (out, rec) = newton_solve(&op, &field, &rhs, &field, &NewtonOptions::default()).unwrap();
    assert_eq!(rec.iterations, 0);
    assert_eq!(out, field);
}

#[test]
fn newton_converges_quadratically_to_constant_sphere() {
    let d = disk(17, 32);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let op = DiscreteOperator { domain: &d, ambient: SpaceForm::EUCLIDEAN.into(), spec: &spec };
    let boundary = DiscreteField::from_u(&d, |_| 1.0);
    let rc = d.chart_radius;
    let init = DiscreteField::from_u(&d, |n| 1.0 + 0.05 * (1.0 - n.r * n.r / (rc * rc)));
    let (out, rec) = newton_solve(&op, &boundary, &constant_rhs(1.0), &init, &NewtonOptions::default()).unwrap();
    assert!(rec.final_residual <= 1e-10);
    let err = (0..d.len()).map(|i| (out.u(&d, i) - 1.0).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "{err}");
    // the tail before roundoff: r_{k+1} <= c r_k^2
    let r = &rec.residuals;
    assert!(r.len() >= 4, "{r:?}");
    for w in r[r.len() - 3..].windows(2) {
        if w[0] > 1e-8 {
            assert!(w[1] <= 10.0 * w[0] * w[0], "{r:?}");
        }
    }
}

#[test]
fn newton_rejects_nonconvex_start() {
    let d = disk(9, 16);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let op = DiscreteOperator { domain: &d, ambient: SpaceForm::EUCLIDEAN.into(), spec: &spec };
    let boundary = DiscreteField::from_u(&d, |_| 1.0);
    let init = DiscreteField::from_u(&d, |n| 1.0 - 0.8 * n.r * n.r);
    let err = newton_solve(&op, &boundary, &constant_rhs(1.0), &init, &NewtonOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

fn auxiliary_setup(d: &PolarDomain) -> (CurvatureFunction, Subsolution, Vec<f64>) {
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let sub = exact_sub(d, "1.5 + 0.1*y1^2");
    let op = DiscreteOperator { domain: d, ambient: SpaceForm::EUCLIDEAN.into(), spec: &spec };
    let psi_lower = op.operator_values(&sub.field).unwrap();
    (spec, sub, psi_lower)
}

#[test]
fn auxiliary_path_starts_at_the_subsolution() {
    let d = disk(9, 16);
    let (spec, sub, psi_lower) = auxiliary_setup(&d);
    let psi = ExpressionPsi::new(Expression::constant(0.5));
    let path = PathProblem {
        domain: &d,
        model: SpaceForm::EUCLIDEAN,
        spec: &spec,
        psi: &psi,
        boundary: &sub.field,
        subsolution: &sub,
        psi_lower: &psi_lower,
    };
    let out = continuation_run(&path, &HomotopyConfig::new(PathKind::Auxiliary, 0.3), &sub.field).unwrap();
    assert!(out.success);
    assert_eq!(out.steps[0].t, 0.0);
    assert_eq!(out.steps[0].newton_iterations, 0);
    assert!(out.steps.windows(2).all(|w| w[0].t < w[1].t));
    assert_eq!(out.t_reached, 1.0);
}

#[test]
fn path_endpoints_agree() {
    let d = disk(9, 16);
    let (spec, sub, psi_lower) = auxiliary_setup(&d);
    let psi = ExpressionPsi::new(Expression::parse("0.5 + 0.1*u^2", &VARS).unwrap());
    let path = PathProblem {
        domain: &d,
        model: SpaceForm::HYPERBOLIC,
        spec: &spec,
        psi: &psi,
        boundary: &sub.field,
        subsolution: &sub,
        psi_lower: &psi_lower,
    };
    // any convex field in range will do
    let field = DiscreteField::from_u(&d, |n| 1.3 + 0.1 * n.y.x * n.y.x);
    let a = path_residual(&path, &HomotopyConfig::new(PathKind::Auxiliary, 0.2), 1.0, &field).unwrap();
    let b = path_residual(&path, &HomotopyConfig::new(PathKind::Main, 0.2), 0.0, &field).unwrap();
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-14, "{worst:e}");
}

#[test]
fn inadmissible_epsilon_is_rejected() {
    let d = disk(9, 16);
    let (spec, sub, psi_lower) = auxiliary_setup(&d);
    let psi = ExpressionPsi::new(Expression::constant(0.5));
    let path = PathProblem {
        domain: &d,
        model: SpaceForm::EUCLIDEAN,
        spec: &spec,
        psi: &psi,
        boundary: &sub.field,
        subsolution: &sub,
        psi_lower: &psi_lower,
    };
    let err = validate_config(&path, &HomotopyConfig::new(PathKind::Main, 5.0)).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn stalled_continuation_returns_last_good_step() {
    let d = disk(9, 16);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let sub = exact_sub(&d, "1");
    let psi = ExpressionPsi::new(Expression::constant(1.0));
    let p = Problem { domain: &d, model: SpaceForm::EUCLIDEAN, spec: &spec, psi: &psi, boundary: &sub.field, subsolution: &sub };
    let mut settings = PipelineSettings::default();
    settings.newton.max_iterations = 1;
    settings.newton.tolerance = 1e-15;
    settings.newton.step_tolerance = 0.0;
    let out = solve(&p, &settings).unwrap();
    assert!(!out.success);
    let f = out.report.failure.as_ref().unwrap();
    assert!(f.t >= f.last_t);
    assert!(!f.reason.is_empty());
}

#[test]
fn path_selection_must_match_the_model() {
    let d = disk(9, 16);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let sub = exact_sub(&d, "1");
    let psi = ExpressionPsi::new(Expression::constant(1.0));
    let p = Problem { domain: &d, model: SpaceForm::EUCLIDEAN, spec: &spec, psi: &psi, boundary: &sub.field, subsolution: &sub };
    let settings = PipelineSettings { path: PathSelection::Spherical, ..Default::default() };
    assert!(matches!(solve(&p, &settings), Err(Error::Unsupported { .. })));
    let p = Problem { model: SpaceForm::SPHERICAL, ..p };
    let settings = PipelineSettings { path: PathSelection::Main, ..Default::default() };
    assert!(matches!(solve(&p, &settings), Err(Error::Unsupported { .. })));
}

#[test]
fn spherical_pipeline_keeps_a_strict_subsolution() {
    let d = disk(9, 16);
    let c = 1.0 / (PI / 5.0).tan();
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let sub = exact_sub(&d, &format!("{c:?}"));
    let psi = ExpressionPsi::new(Expression::constant(c));
    let p = Problem { domain: &d, model: SpaceForm::SPHERICAL, spec: &spec, psi: &psi, boundary: &sub.field, subsolution: &sub };
    let out = solve(&p, &PipelineSettings::default()).unwrap();
    assert!(out.success);
    let phases: Vec<&str> = out.report.steps.iter().map(|s| s.phase.as_str()).collect();
    for phase in ["auxiliary", "spherical", "epsilon_removal"] {
        assert!(phases.contains(&phase), "{phases:?}");
    }
    for s in out.report.steps.iter().filter(|s| s.phase == "spherical") {
        assert!(s.subsolution_margin.unwrap() > 1e-12, "{s:?}");
    }
    assert!(out.report.steps.iter().all(|s| s.kappa_min > 0.0));
    let p = out.report.parameters;
    assert_eq!(p.delta1, Some(0.05));
    assert!(p.delta2.unwrap() * c * c < 0.5 * p.epsilon.unwrap());
}

#[test]
fn subsolution_check_examples() {
    let d = disk(9, 16);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let c = 1.7;
    let sub = exact_sub(&d, &format!("{c:?}"));
    let exact = verify_subsolution(&d, SpaceForm::EUCLIDEAN.into(), &spec, &ExpressionPsi::new(Expression::constant(c)), &sub);
    assert!(exact.verdict && exact.min_margin.abs() < 1e-12);

    let half = verify_subsolution(&d, SpaceForm::EUCLIDEAN.into(), &spec, &ExpressionPsi::new(Expression::constant(c / 2.0)), &sub);
    assert!(half.verdict);
    for i in d.interior() {
        assert!((half.margins[i] - c / 2.0).abs() < 1e-12);
    }

    let bumpy = Subsolution::discrete(DiscreteField::from_u(&d, |n| 1.0 - 0.8 * n.r * n.r));
    let r = verify_subsolution(&d, SpaceForm::EUCLIDEAN.into(), &spec, &ExpressionPsi::new(Expression::constant(0.1)), &bumpy);
    assert!(!r.verdict);
    assert!(r.note.unwrap().contains("cone violation"));
}

#[test]
fn monitors_of_a_constant_field() {
    let d = disk(9, 16);
    let c = 1.4;
    let field = DiscreteField::from_u(&d, |_| c);
    let m = estimate_monitors(&d, &field, SpaceForm::EUCLIDEAN.into()).unwrap();
    assert!((m.c0 - c.max(1.0 / c)).abs() < 1e-12);
    // ũ = μc is not constant on the chart, so C₁ and K₀ carry truncation error
    assert!(m.c1 < 1e-3, "{m:?}");
    assert!((m.k0 - c.max(1.0 / c)).abs() < 1e-3, "{m:?}");
    // u_L = 1 for K = −1
    let m = estimate_monitors(&d, &field, SpaceForm::HYPERBOLIC.into()).unwrap();
    assert!((m.c0 - 1.0 / (c - 1.0)).abs() < 1e-9);

    let bumpy = DiscreteField::from_u(&d, |n| 1.0 - 0.8 * n.r * n.r);
    assert!(matches!(estimate_monitors(&d, &bumpy, Ambient::Deformed(0.5)), Err(Error::Precondition(_))));
}

#[test]
fn monitors_stabilize_under_refinement() {
    let text = "cosh(0.3 + 0.1*y1)";
    let m: Vec<Monitors> = [(17, 32), (33, 64), (65, 128)]
        .into_iter()
        .map(|(n_r, n_t)| {
            let d = disk(n_r, n_t);
            let sub = exact_sub(&d, text);
            estimate_monitors(&d, &sub.field, SpaceForm::HYPERBOLIC.into()).unwrap()
        })
        .collect();
    // drift between the last two grids
    let (prev, m) = (m[1], m[2]);
    {
        {
            for (a, b) in [(prev.c0, m.c0), (prev.c1, m.c1), (prev.k0, m.k0), (prev.min_support, m.min_support), (prev.boundary_hessian, m.boundary_hessian)] {
                assert!((a - b).abs() <= 0.02 * b.abs(), "{prev:?} {m:?}");
            }
        }
    }
}

#[test]
fn report_lines_are_json() {
    let d = disk(9, 16);
    let spec = CurvatureFunction::sigma_root(2, 2).unwrap();
    let sub = exact_sub(&d, "1");
    let psi = ExpressionPsi::new(Expression::constant(1.0));
    let p = Problem { domain: &d, model: SpaceForm::EUCLIDEAN, spec: &spec, psi: &psi, boundary: &sub.field, subsolution: &sub };
    let out = solve(&p, &PipelineSettings::default()).unwrap();
    let mut buf = Vec::new();
    out.report.write_jsonl(&mut buf, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), out.report.steps.len() + 1);
    assert_eq!(lines.last().unwrap()["record"], "summary");
    assert_eq!(lines[0]["record"], "step");
    assert_eq!(lines[0]["phase"], "auxiliary");
}
