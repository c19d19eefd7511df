//! Seeded self-checks of the geometry and operator kernels against
//! independent oracles: alternative formulations, finite differences and
//! chart identities.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curvature::CurvatureFunction;
use crate::discretization::chart;
use crate::discretization::{AnalyticField, GnomonicChart};
use crate::error::Result;
use crate::expr::{Expression, Var};
use crate::geometry::{frame_from_rho, frame_from_u, frame_from_v, ScalarJet2};
use crate::linalg::rel_frobenius;
use crate::operator::{dg_t_dt, evaluate_g, evaluate_g_t, linearize_g};
use crate::spaceform::{Ambient, SpaceForm};

pub const FORMULATION_TOLERANCE: f64 = 1e-10;
pub const SQRT_METRIC_TOLERANCE: f64 = 1e-12;
pub const LINEARIZATION_FD_STEP: f64 = 1e-5;
pub const LINEARIZATION_TOLERANCE: f64 = 1e-6;
pub const MONOTONICITY_FLOOR: f64 = -1e-10;
pub const T_FD_STEP: f64 = 1e-5;
pub const T_DERIVATIVE_TOLERANCE: f64 = 1e-6;
pub const ENDPOINT_TOLERANCE: f64 = 1e-12;
pub const CHART_FD_STEP: f64 = 1e-4;
pub const CHART_TOLERANCE: f64 = 1e-6;

/// Outcome of one suite: the worst error seen and its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub failures: usize,
    pub passed: bool,
    /// First failure, if any.
    pub note: Option<String>,
}

struct Tally {
    name: &'static str,
    samples: usize,
    worst: f64,
    tolerance: f64,
    failures: usize,
    note: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, samples: 0, worst: 0.0, tolerance, failures: 0, note: None }
    }

    /// Records an error that must not exceed the tolerance.
    fn error(&mut self, value: Result<f64>, what: impl FnOnce() -> String) {
        self.samples += 1;
        match value {
            Ok(e) if e <= self.tolerance => self.worst = self.worst.max(e),
            Ok(e) => {
                self.worst = if e.is_nan() { f64::NAN } else { self.worst.max(e) };
                self.fail(format!("{}: error {e:e}", what()));
            }
            Err(err) => self.fail(format!("{}: {err}", what())),
        }
    }

    fn fail(&mut self, msg: String) {
        self.failures += 1;
        self.note.get_or_insert(msg);
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name,
            samples: self.samples,
            worst: self.worst,
            tolerance: self.tolerance,
            failures: self.failures,
            passed: self.failures == 0 && self.samples > 0,
            note: self.note,
        }
    }
}

/// Random symmetric matrix with eigenvalues drawn from `range`.
fn random_spd(rng: &mut ChaCha8Rng, n: usize, range: std::ops::Range<f64>) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let d = DVector::from_fn(n, |_, _| rng.random_range(range.clone()));
    let m = &q * DMatrix::from_diagonal(&d) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random u-jet with ∇²u + uI positive definite and u above `u_lower`.
pub fn random_convex_u_jet(rng: &mut ChaCha8Rng, u_lower: f64, n: usize) -> ScalarJet2 {
    let u = u_lower + rng.random_range(0.2..2.5);
    let gradient = DVector::from_fn(n, |_, _| rng.random_range(-0.8..0.8));
    let m = random_spd(rng, n, 0.1 * u..2.0 * u);
    let hessian = m - DMatrix::identity(n, n) * u;
    ScalarJet2::new(u, gradient, hessian).expect("generated jet is valid")
}

fn models() -> [SpaceForm; 3] {
    SpaceForm::all()
}

fn rel_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

/// Principal curvatures from the ρ-, u- and v-forms of one random jet.
pub fn formulation_errors(model: SpaceForm, jet_u: &ScalarJet2) -> Result<f64> {
    let z = model.zeta(jet_u.value)?;
    let jet_rho = jet_u.compose(z.value, z.d1, z.d2);
    // v = η⁻¹(u): (η⁻¹)' = 1/η', (η⁻¹)'' = −η''/η'³
    let v = model.eta_inverse(jet_u.value)?;
    let e = model.eta(v)?;
    let jet_v = jet_u.compose(v, 1.0 / e.d1, -e.d2 / e.d1.powi(3));
    let ku = frame_from_u(model, jet_u)?.principal_curvatures;
    let kr = frame_from_rho(model, &jet_rho)?.principal_curvatures;
    let kv = frame_from_v(model, &jet_v)?.principal_curvatures;
    Ok(rel_vec(&kr, &ku).max(rel_vec(&kv, &ku)))
}

pub fn formulation_equivalence(seed: u64, per_case: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("formulation-equivalence", FORMULATION_TOLERANCE);
    for model in models() {
        for n in [2, 3] {
            for s in 0..per_case {
                let jet = random_convex_u_jet(&mut rng, model.u_lower(), n);
                tally.error(formulation_errors(model, &jet), || {
                    format!("K={} n={n} sample {s}", model.curvature_sign())
                });
            }
        }
    }
    tally.finish()
}

/// γγ = g, γγ⁻¹ = I and g g⁻¹ = I in every formulation, plus the chart
/// square root of σ.
pub fn sqrt_metric(seed: u64, per_case: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("square-root-metric", SQRT_METRIC_TOLERANCE);
    for model in models() {
        for n in [2, 3] {
            let id = DMatrix::identity(n, n);
            for s in 0..per_case {
                let jet = random_convex_u_jet(&mut rng, model.u_lower(), n);
                let err = (|| {
                    let z = model.zeta(jet.value)?;
                    let jet_rho = jet.compose(z.value, z.d1, z.d2);
                    let v = model.eta_inverse(jet.value)?;
                    let frames = [
                        frame_from_u(model, &jet)?,
                        frame_from_rho(model, &jet_rho)?,
                        frame_from_v(model, &ScalarJet2::new(v, jet.gradient.clone(), jet.hessian.clone())?)?,
                    ];
                    Ok(frames.iter().fold(0.0f64, |m, f| {
                        m.max(rel_frobenius(&(&f.sqrt_metric * &f.sqrt_metric), &f.metric))
                            .max(rel_frobenius(&(&f.sqrt_metric * &f.inv_sqrt_metric), &id))
                            .max(rel_frobenius(&(&f.metric * &f.inverse_metric), &id))
                    }))
                })();
                tally.error(err, || format!("K={} n={n} sample {s}", model.curvature_sign()));
            }
        }
    }
    for s in 0..per_case {
        let y = Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let r = chart::sqrt_metric(y);
        let err = (r * r - chart::metric(y)).amax() / chart::metric(y).amax();
        tally.error(Ok(err), || format!("chart sample {s}"));
    }
    tally.finish()
}

/// Curvature functions exercised by the operator suites.
pub fn operator_specs(n: usize) -> Vec<(&'static str, CurvatureFunction)> {
    vec![
        ("S1", CurvatureFunction::sigma(1, n).expect("valid")),
        ("S2^(1/2)", CurvatureFunction::sigma_root(2, n).expect("valid")),
        ("Sn^(1/n)", CurvatureFunction::sigma_root(n, n).expect("valid")),
        ("S2/S1", CurvatureFunction::quotient_root(2, 1, n).expect("valid")),
    ]
}

/// Worst relative mismatch of (G^{ij}, G^s, G_u) against central differences
/// of G. Vectors and matrices are compared in the max norm relative to the
/// max norm of the closed form.
pub fn linearization_error(ambient: Ambient, spec: &CurvatureFunction, jet: &ScalarJet2) -> Result<f64> {
    let h = LINEARIZATION_FD_STEP;
    let lin = linearize_g(ambient, spec, jet)?;
    let g = |j: &ScalarJet2| evaluate_g(ambient, spec, j);
    let n = jet.dim();

    let mut shifted = jet.clone();
    shifted.value = jet.value + h;
    let gp = g(&shifted)?;
    shifted.value = jet.value - h;
    let g_u = (gp - g(&shifted)?) / (2.0 * h);
    let scalar = (g_u - lin.zeroth_order).abs() / lin.zeroth_order.abs().max(f64::MIN_POSITIVE);

    let mut g_s = DVector::zeros(n);
    let mut g_ij = DMatrix::zeros(n, n);
    for s in 0..n {
        let mut j = jet.clone();
        j.gradient[s] += h;
        let gp = g(&j)?;
        j.gradient[s] -= 2.0 * h;
        g_s[s] = (gp - g(&j)?) / (2.0 * h);
        for r in s..n {
            // symmetric perturbation of r_sr and r_rs
            let bump = |sign: f64| {
                let mut j = jet.clone();
                j.hessian[(s, r)] += sign * h;
                if r != s {
                    j.hessian[(r, s)] += sign * h;
                }
                g(&j)
            };
            let d = (bump(1.0)? - bump(-1.0)?) / (2.0 * h);
            let d = if r == s { d } else { 0.5 * d };
            g_ij[(s, r)] = d;
            g_ij[(r, s)] = d;
        }
    }
    let first = rel_vec(&g_s, &lin.first_order);
    let second = (&g_ij - &lin.second_order).amax() / lin.second_order.amax().max(f64::MIN_POSITIVE);
    Ok(scalar.max(first).max(second))
}

pub fn linearization_fd(seed: u64, per_case: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("linearization-fd", LINEARIZATION_TOLERANCE);
    for model in models() {
        for n in [2, 3] {
            let specs = operator_specs(n);
            for s in 0..per_case {
                let jet = random_convex_u_jet(&mut rng, model.u_lower(), n);
                for (name, spec) in &specs {
                    tally.error(linearization_error(model.into(), spec, &jet), || {
                        format!("K={} n={n} f={name} sample {s}", model.curvature_sign())
                    });
                }
            }
        }
    }
    tally.finish()
}

/// t-values used by the deformation suite.
pub fn t_grid() -> impl Iterator<Item = f64> {
    (0..=10).map(|k| k as f64 / 10.0)
}

/// Relative mismatch between ∂Gᵗ/∂t and a t-difference of Gᵗ (one-sided
/// second order at the ends of [0, 1]). Returns (closed form, error).
pub fn t_derivative_error(spec: &CurvatureFunction, jet: &ScalarJet2, t: f64) -> Result<(f64, f64)> {
    let h = T_FD_STEP;
    let g = |s: f64| evaluate_g_t(s, spec, jet);
    let fd = if t - h < 0.0 {
        (-3.0 * g(t)? + 4.0 * g(t + h)? - g(t + 2.0 * h)?) / (2.0 * h)
    } else if t + h > 1.0 {
        (3.0 * g(t)? - 4.0 * g(t - h)? + g(t - 2.0 * h)?) / (2.0 * h)
    } else {
        (g(t + h)? - g(t - h)?) / (2.0 * h)
    };
    let exact = dg_t_dt(t, spec, jet)?;
    // Scale by |G| so that the vanishing derivative at t = 0 is compared absolutely.
    let scale = exact.abs().max(g(t)?.abs());
    Ok((exact, (fd - exact).abs() / scale))
}

pub fn deformation_monotonicity(seed: u64, per_case: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("deformation-monotonicity", T_DERIVATIVE_TOLERANCE);
    let mut min_derivative = f64::INFINITY;
    for n in [2, 3] {
        let specs = operator_specs(n);
        for s in 0..per_case {
            let jet = random_convex_u_jet(&mut rng, 0.0, n);
            for (name, spec) in &specs {
                for t in t_grid() {
                    let r = t_derivative_error(spec, &jet, t);
                    if let Ok((d, _)) = r {
                        min_derivative = min_derivative.min(d);
                        if d < MONOTONICITY_FLOOR {
                            tally.fail(format!("n={n} f={name} sample {s} t={t}: dG/dt = {d:e}"));
                        }
                    }
                    tally.error(r.map(|x| x.1), || format!("n={n} f={name} sample {s} t={t}"));
                }
                let ends = (|| -> Result<f64> {
                    let e0 = (evaluate_g_t(0.0, spec, &jet)? - evaluate_g(SpaceForm::EUCLIDEAN, spec, &jet)?).abs();
                    let e1 = (evaluate_g_t(1.0, spec, &jet)? - evaluate_g(SpaceForm::SPHERICAL, spec, &jet)?).abs();
                    Ok(e0.max(e1))
                })();
                match ends {
                    Ok(e) if e <= ENDPOINT_TOLERANCE => {}
                    Ok(e) => tally.fail(format!("n={n} f={name} sample {s}: endpoint mismatch {e:e}")),
                    Err(e) => tally.fail(format!("n={n} f={name} sample {s}: {e}")),
                }
            }
        }
    }
    log::debug!("smallest dG/dt seen: {min_derivative:e}");
    tally.finish()
}

/// ∂_ij u − Γ^k_ij ∂_k u + u σ_ij by central differences of u on the chart.
pub fn christoffel_convexity(f: &AnalyticField, y: Vector2<f64>) -> Matrix2<f64> {
    let h = CHART_FD_STEP;
    let u = |a: f64, b: f64| f.u(y + Vector2::new(a, b));
    let u0 = u(0.0, 0.0);
    let grad = Vector2::new((u(h, 0.0) - u(-h, 0.0)) / (2.0 * h), (u(0.0, h) - u(0.0, -h)) / (2.0 * h));
    let uxx = (u(h, 0.0) - 2.0 * u0 + u(-h, 0.0)) / (h * h);
    let uyy = (u(0.0, h) - 2.0 * u0 + u(0.0, -h)) / (h * h);
    let uxy = (u(h, h) - u(h, -h) - u(-h, h) + u(-h, -h)) / (4.0 * h * h);
    let gamma = chart::christoffel(y);
    Matrix2::new(uxx, uxy, uxy, uyy) - gamma[0] * grad.x - gamma[1] * grad.y + chart::metric(y) * u0
}

/// The gnomonic identity ∇²u + uσ = D²ũ/μ against the Christoffel form.
pub fn chart_identity(seed: u64, per_case: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("chart-identity", CHART_TOLERANCE);
    let vars = [Var::Y1, Var::Y2, Var::Z1, Var::Z2, Var::Z3];
    for s in 0..per_case {
        let center = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.2..1.0));
        let c: [f64; 5] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
        let text = format!(
            "1.5 + {:?}*z1 + {:?}*z2^2 + {:?}*z1*z3 + {:?}*sin(y1) + {:?}*exp(0.5*y2)",
            c[0], c[1], c[2], c[3], c[4]
        );
        let err = (|| {
            let gc = GnomonicChart::new(center)?;
            let f = AnalyticField::gnomonic(&Expression::parse(&text, &vars)?, &gc)?;
            let y = Vector2::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
            let lhs = christoffel_convexity(&f, y);
            let rhs = f.chart_derivatives(y).hessian / chart::mu(y);
            Ok((lhs - rhs).amax() / rhs.amax().max(1.0))
        })();
        tally.error(err, || format!("sample {s}: {text}"));
    }
    tally.finish()
}

/// Sample counts of the default verification run.
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_LINEARIZATION_SAMPLES: usize = 100;
pub const DEFAULT_DEFORMATION_SAMPLES: usize = 100;
pub const DEFAULT_CHART_SAMPLES: usize = 200;

/// Every suite with its default sample count. Suites use distinct streams
/// derived from `seed`.
pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        formulation_equivalence(seed, DEFAULT_SAMPLES),
        sqrt_metric(seed.wrapping_add(1), DEFAULT_SAMPLES),
        linearization_fd(seed.wrapping_add(2), DEFAULT_LINEARIZATION_SAMPLES),
        deformation_monotonicity(seed.wrapping_add(3), DEFAULT_DEFORMATION_SAMPLES),
        chart_identity(seed.wrapping_add(4), DEFAULT_CHART_SAMPLES),
    ]
}
