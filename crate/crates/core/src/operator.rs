//! The curvature operator G(r, p, u) = f(κ[u]) and its exact linearization.
//!
//! G is evaluated in the u-formulation. Its derivatives with respect to the
//! Hessian slot r, the gradient slot p and the value u are closed-form
//! contractions of F^{ij} = ∂F/∂a_ij with the geometric matrices of the
//! graph. The v-formulation 𝒢[v] = G[η(v)] and the t-deformed operator Gᵗ
//! are built on the same kernel.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::curvature::CurvatureFunction;
use crate::error::{Error, Result};
use crate::geometry::{deformed_gamma_tilde, frame_deformed, frame_from_warp, ScalarJet2};
use crate::linalg::{min_eigenvalue, sym_eigen, symmetrize};
use crate::spaceform::{Ambient, SpaceForm};

/// Residual tolerance for the equation 𝒢[v] = ψ ξ(v) in [`check_lemma61_sign`].
pub const LEMMA61_PRECONDITION_TOLERANCE: f64 = 1e-8;

thread_local! {
    static FLIP_FIRST_ORDER_TERM: Cell<bool> = const { Cell::new(false) };
}

/// Test hook: flips the sign of the trace term in G^s on the calling thread.
#[doc(hidden)]
pub fn inject_first_order_sign_fault(on: bool) {
    FLIP_FIRST_ORDER_TERM.with(|f| f.set(on));
}

fn first_order_fault() -> bool {
    FLIP_FIRST_ORDER_TERM.with(|f| f.get())
}

/// Coefficients of the linearized operator at one jet.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationCoeffs {
    /// G^{ij} = ∂G/∂r_ij
    pub second_order: DMatrix<f64>,
    /// G^s = ∂G/∂p_s
    pub first_order: DVector<f64>,
    /// G_u = ∂G/∂u
    pub zeroth_order: f64,
    /// G itself
    pub operator_value: f64,
}

/// F^{ij}(A) = Σ_k f_k(κ) q_k q_kᵀ over the eigensystem of A.
pub fn f_matrix(spec: &CurvatureFunction, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(f_and_f_matrix(spec, a)?.1)
}

fn f_and_f_matrix(spec: &CurvatureFunction, a: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let (kappa, q) = sym_eigen(a);
    let (f, grad) = spec.eval_with_grad(kappa.as_slice())?;
    let scaled = DMatrix::from_fn(q.nrows(), q.ncols(), |i, k| q[(i, k)] * grad[k]);
    Ok((f, symmetrize(&(scaled * q.transpose()))))
}

fn check_convex(jet: &ScalarJet2) -> Result<()> {
    let n = jet.dim();
    let m = &jet.hessian + DMatrix::identity(n, n) * jet.value;
    let lam = min_eigenvalue(&m);
    if lam > 0.0 {
        Ok(())
    } else {
        Err(Error::ConeViolation(format!(
            "jet is not strictly locally convex: min eig(hessian + u I) = {lam:e}"
        )))
    }
}

/// Frame quantities of a u-jet in the given background.
pub fn frame_for(ambient: Ambient, jet: &ScalarJet2) -> Result<crate::geometry::FrameQuantities> {
    match ambient {
        Ambient::Model(m) => frame_from_warp(jet, &m.warp_at_u(jet.value)?),
        Ambient::Deformed(t) => frame_deformed(t, jet),
    }
}

/// G = f(κ[u]).
pub fn evaluate_g(
    ambient: impl Into<Ambient>,
    spec: &CurvatureFunction,
    jet: &ScalarJet2,
) -> Result<f64> {
    check_convex(jet)?;
    let frame = frame_for(ambient.into(), jet)?;
    spec.eval(frame.principal_curvatures.as_slice())
}

/// Gᵗ = F(aᵗ) in the t-deformed background.
pub fn evaluate_g_t(t: f64, spec: &CurvatureFunction, jet: &ScalarJet2) -> Result<f64> {
    evaluate_g(Ambient::Deformed(t), spec, jet)
}

/// Closed-form (G^{ij}, G^s, G_u, G).
pub fn linearize_g(
    ambient: impl Into<Ambient>,
    spec: &CurvatureFunction,
    jet: &ScalarJet2,
) -> Result<LinearizationCoeffs> {
    check_convex(jet)?;
    let ambient = ambient.into();
    let warp = ambient.warp_at_u(jet.value)?;
    let frame = frame_for(ambient, jet)?;
    let (value, fm) = f_and_f_matrix(spec, &frame.curvature_matrix)?;

    let (phi, dphi, z1, z2) = (warp.phi, warp.dphi, warp.dzeta, warp.d2zeta);
    let p = &jet.gradient;
    let w2 = phi * phi + z1 * z1 * p.norm_squared();
    let w = w2.sqrt();
    let gi = &frame.inv_sqrt_metric;
    let ginv = &frame.inverse_metric;
    let a = &frame.curvature_matrix;

    // B_iq = F^{ij} a_qj
    let b = &fm * a;
    let tr_fa = b.trace();

    let second_order = symmetrize(&(gi * &fm * gi * (-phi * z1 / w)));

    let cross = (gi * &b * p) * w + (gi * b.transpose() * p) * phi;
    let trace_sign = if first_order_fault() { 1.0 } else { -1.0 };
    let first_order =
        cross * (-2.0 * z1 * z1 / (w * (phi + w))) + p * (trace_sign * z1 * z1 / w2 * tr_fa);

    let x = ginv * (phi * dphi * z1) + p * p.transpose() * (z1 * z2 / w2);
    let zeroth_order = -2.0 * (&x * &b).trace()
        + (dphi * z1 / phi - phi * dphi * z1 / w2 + phi * phi * z2 / (z1 * w2)) * tr_fa
        - phi * z1 / w * (&fm * ginv).trace();

    Ok(LinearizationCoeffs {
        second_order,
        first_order,
        zeroth_order,
        operator_value: value,
    })
}

/// ∂Gᵗ/∂t in closed form; nonnegative on strictly locally convex jets.
pub fn dg_t_dt(t: f64, spec: &CurvatureFunction, jet: &ScalarJet2) -> Result<f64> {
    check_convex(jet)?;
    let frame = frame_deformed(t, jet)?;
    let fm = f_matrix(spec, &frame.curvature_matrix)?;
    let n = jet.dim();
    let u = jet.value;
    let p = &jet.gradient;
    let big_p = p.norm_squared();
    let s = u * u + t * t;
    let gt = deformed_gamma_tilde(t, u, p);
    let m = &jet.hessian + DMatrix::identity(n, n) * u;
    let weight = DMatrix::identity(n, n) * big_p + p * p.transpose() * 2.0;
    let core = weight * &gt * m * &gt;
    Ok(t / (s.sqrt() * (s + big_p).powf(1.5)) * (&fm * core).trace())
}

/// Pushes a jet of v forward to the jet of u = η(v).
pub fn push_forward_v(model: SpaceForm, jet_v: &ScalarJet2) -> Result<ScalarJet2> {
    let eta = model.eta(jet_v.value)?;
    Ok(jet_v.compose(eta.value, eta.d1, eta.d2))
}

/// 𝒢[v] = G[η(v)].
pub fn evaluate_g_v(model: SpaceForm, spec: &CurvatureFunction, jet_v: &ScalarJet2) -> Result<f64> {
    evaluate_g(model, spec, &push_forward_v(model, jet_v)?)
}

/// 𝒢 and ∂𝒢/∂v by the chain rule through u = η(v).
pub fn linearize_g_v_value(
    model: SpaceForm,
    spec: &CurvatureFunction,
    jet_v: &ScalarJet2,
) -> Result<(f64, f64)> {
    let eta = model.eta(jet_v.value)?;
    let eta3 = model.eta_third(jet_v.value);
    let jet_u = jet_v.compose(eta.value, eta.d1, eta.d2);
    let lin = linearize_g(model, spec, &jet_u)?;
    let pv = &jet_v.gradient;
    let dr = &jet_v.hessian * eta.d2 + pv * pv.transpose() * eta3;
    let g_v = lin.zeroth_order * eta.d1
        + lin.first_order.dot(pv) * eta.d2
        + lin.second_order.component_mul(&dr).sum();
    Ok((lin.operator_value, g_v))
}

/// Returns 𝒢_v − ψ ξ'(v) at a point where 𝒢[v] = ψ ξ(v); negative values
/// are the expected outcome for K ∈ {0, −1}.
pub fn check_lemma61_sign(
    model: SpaceForm,
    spec: &CurvatureFunction,
    jet_v: &ScalarJet2,
    psi: f64,
) -> Result<f64> {
    if model == SpaceForm::SPHERICAL {
        return Err(Error::Unsupported {
            curvature_sign: 1,
            what: "the sign check of the auxiliary equation",
        });
    }
    if !(psi > 0.0) {
        return Err(Error::InvalidInput(format!("psi must be positive, got {psi}")));
    }
    let (xi, dxi) = model.xi(jet_v.value)?;
    let (g, g_v) = linearize_g_v_value(model, spec, jet_v)?;
    let residual = (g - psi * xi).abs();
    let tolerance = LEMMA61_PRECONDITION_TOLERANCE * (1.0 + (psi * xi).abs());
    if residual > tolerance {
        return Err(Error::StaleInput { residual, tolerance });
    }
    Ok(g_v - psi * dxi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::frame_from_u;
    use crate::linalg::rel_frobenius;
    use approx::assert_relative_eq;

    fn jet(v: f64, p: &[f64], h: &[f64]) -> ScalarJet2 {
        ScalarJet2::from_slices(v, p, h).unwrap()
    }

    #[test]
    fn f_matrix_examples() {
        let s1 = CurvatureFunction::sigma(1, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(rel_frobenius(&f_matrix(&s1, &a).unwrap(), &DMatrix::identity(2, 2)) < 1e-14);
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        let f = f_matrix(&g, &DMatrix::identity(2, 2)).unwrap();
        assert!(rel_frobenius(&f, &(DMatrix::identity(2, 2) * 0.5)) < 1e-14);
        let f = f_matrix(&g, &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        assert!(rel_frobenius(&f, &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25]))) < 1e-14);
    }

    #[test]
    fn evaluate_examples() {
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        assert_relative_eq!(
            evaluate_g(SpaceForm::EUCLIDEAN, &g, &ScalarJet2::constant(1.7, 2).unwrap()).unwrap(),
            1.7,
            epsilon = 1e-14
        );
        let s1 = CurvatureFunction::sigma(1, 3).unwrap();
        assert_relative_eq!(
            evaluate_g(SpaceForm::SPHERICAL, &s1, &ScalarJet2::constant(0.4, 3).unwrap()).unwrap(),
            1.2,
            epsilon = 1e-14
        );
        let j = jet(1.2, &[0.3, -0.2], &[0.4, 0.1, 0.1, -0.3]);
        let k = frame_from_u(SpaceForm::HYPERBOLIC, &j).unwrap().principal_curvatures;
        assert_relative_eq!(
            evaluate_g(SpaceForm::HYPERBOLIC, &g, &j).unwrap(),
            g.eval(k.as_slice()).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn rejects_nonconvex() {
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        let j = jet(1.0, &[0.0, 0.0], &[-2.0, 0.0, 0.0, 0.0]);
        assert!(evaluate_g(SpaceForm::EUCLIDEAN, &g, &j).unwrap_err().is_cone_violation());
    }

    #[test]
    fn constant_field_has_zero_first_order() {
        let g = CurvatureFunction::sigma_root(3, 3).unwrap();
        for (m, c) in [(SpaceForm::EUCLIDEAN, 0.5), (SpaceForm::SPHERICAL, 1.5), (SpaceForm::HYPERBOLIC, 2.0)] {
            let lin = linearize_g(m, &g, &ScalarJet2::constant(c, 3).unwrap()).unwrap();
            assert!(lin.first_order.amax() == 0.0);
        }
    }

    #[test]
    fn second_order_matches_matrix_oracle_for_mean_curvature() {
        let s1 = CurvatureFunction::sigma(1, 2).unwrap();
        let j = jet(0.8, &[0.4, -0.3], &[0.5, 0.2, 0.2, 0.9]);
        let lin = linearize_g(SpaceForm::EUCLIDEAN, &s1, &j).unwrap();
        // φ = 1/u, ζ' = −1/u² for the Euclidean model
        let (u, p) = (0.8f64, [0.4f64, -0.3]);
        let (phi, z1) = (1.0 / u, -1.0 / (u * u));
        let w = (phi * phi + z1 * z1 * (p[0] * p[0] + p[1] * p[1])).sqrt();
        let mut gi = [[0.0; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                let d = if i == k { 1.0 } else { 0.0 };
                gi[i][k] = (d - z1 * z1 * p[i] * p[k] / (w * (phi + w))) / phi;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += gi[i][k] * gi[j][k];
                }
                assert_relative_eq!(lin.second_order[(i, j)], -phi * z1 / w * s, max_relative = 1e-13);
            }
        }
    }

    fn fd_check(ambient: Ambient, spec: &CurvatureFunction, j: &ScalarJet2) {
        let h = 1e-5;
        let lin = linearize_g(ambient, spec, j).unwrap();
        let n = j.dim();
        for s in 0..n {
            let mut jp = j.clone();
            jp.gradient[s] += h;
            let mut jm = j.clone();
            jm.gradient[s] -= h;
            let fd = (evaluate_g(ambient, spec, &jp).unwrap() - evaluate_g(ambient, spec, &jm).unwrap()) / (2.0 * h);
            assert!((fd - lin.first_order[s]).abs() <= 1e-6 * (1.0 + fd.abs()), "{ambient:?} s={s}: {fd} vs {}", lin.first_order[s]);
        }
        let mut jp = j.clone();
        jp.value += h;
        let mut jm = j.clone();
        jm.value -= h;
        let fd = (evaluate_g(ambient, spec, &jp).unwrap() - evaluate_g(ambient, spec, &jm).unwrap()) / (2.0 * h);
        assert!((fd - lin.zeroth_order).abs() <= 1e-6 * (1.0 + fd.abs()), "{ambient:?}: {fd} vs {}", lin.zeroth_order);
    }

    #[test]
    fn lower_order_coefficients_match_finite_differences() {
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        let j = jet(1.3, &[0.35, -0.2], &[0.3, 0.1, 0.1, 0.6]);
        for m in SpaceForm::all() {
            fd_check(m.into(), &g, &j);
        }
        fd_check(Ambient::Deformed(0.4), &g, &j);
    }

    #[test]
    fn fault_hook_breaks_first_order() {
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        let j = jet(1.3, &[0.35, -0.2], &[0.3, 0.1, 0.1, 0.6]);
        let clean = linearize_g(SpaceForm::EUCLIDEAN, &g, &j).unwrap();
        inject_first_order_sign_fault(true);
        let broken = linearize_g(SpaceForm::EUCLIDEAN, &g, &j);
        inject_first_order_sign_fault(false);
        assert!((broken.unwrap().first_order - clean.first_order).amax() > 1e-3);
    }

    #[test]
    fn deformed_examples() {
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        assert_relative_eq!(
            evaluate_g_t(0.7, &g, &ScalarJet2::constant(2.0, 2).unwrap()).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        let j = jet(1.1, &[0.5, -0.3], &[0.4, 0.2, 0.2, 0.8]);
        assert_eq!(dg_t_dt(0.0, &g, &j).unwrap(), 0.0);
        assert_eq!(dg_t_dt(0.6, &g, &ScalarJet2::constant(1.0, 2).unwrap()).unwrap(), 0.0);
        let h = 1e-5;
        let fd = (evaluate_g_t(0.5 + h, &g, &j).unwrap() - evaluate_g_t(0.5 - h, &g, &j).unwrap()) / (2.0 * h);
        let exact = dg_t_dt(0.5, &g, &j).unwrap();
        assert!(exact > 0.0);
        assert_relative_eq!(exact, fd, max_relative = 1e-6);
    }

    #[test]
    fn sign_check_constant_solutions() {
        let g = CurvatureFunction::sigma_root(2, 2).unwrap();
        let c = 0.3f64;
        let r = check_lemma61_sign(SpaceForm::EUCLIDEAN, &g, &ScalarJet2::constant(c, 2).unwrap(), (-c).exp()).unwrap();
        assert_relative_eq!(r, -c.exp(), max_relative = 1e-12);

        let c = 0.8f64;
        let psi = c.cosh() / c.sinh();
        let r = check_lemma61_sign(SpaceForm::HYPERBOLIC, &g, &ScalarJet2::constant(c, 2).unwrap(), psi).unwrap();
        assert_relative_eq!(r, -1.0 / c.sinh(), max_relative = 1e-12);

        let stale = check_lemma61_sign(SpaceForm::EUCLIDEAN, &g, &ScalarJet2::constant(0.3, 2).unwrap(), (-0.3f64).exp() + 1.0);
        assert!(matches!(stale, Err(Error::StaleInput { .. })));
    }
}
