//! Pointwise extrinsic geometry of a radial graph over a domain of Sⁿ.
//!
//! All inputs are jets with respect to a local orthonormal frame of Sⁿ.
//! The graph can be described by the radial function ρ, by u with ρ = ζ(u),
//! or by v with u = η(v); each description has its own closed-form metric,
//! square-root matrices and second fundamental form, and all three give the
//! same principal curvatures.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, sym_eigenvalues, symmetrize};
use crate::spaceform::{deformed_warp_at_u, SpaceForm, Warp};

/// Hessian asymmetry (relative) above which a warning is logged.
pub const HESSIAN_ASYMMETRY_WARN: f64 = 1e-8;
/// Hessian asymmetry (relative) above which the jet is rejected.
pub const HESSIAN_ASYMMETRY_REJECT: f64 = 1e-6;
/// Smallest admissible value of the normal-length denominators.
pub const MIN_NORMAL_DENOMINATOR: f64 = 1e-300;

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet2 {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl ScalarJet2 {
    /// Validates dimensions and finiteness and symmetrizes the Hessian.
    pub fn new(value: f64, gradient: DVector<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let n = gradient.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension must be >= 2, got {n}")));
        }
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "hessian is {}x{}, gradient has length {n}",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if !value.is_finite()
            || gradient.iter().any(|x| !x.is_finite())
            || hessian.iter().any(|x| !x.is_finite())
        {
            return Err(Error::InvalidInput("jet contains non-finite entries".into()));
        }
        let asym = asymmetry(&hessian);
        if asym > HESSIAN_ASYMMETRY_REJECT {
            return Err(Error::InvalidInput(format!(
                "hessian asymmetry {asym:e} exceeds {HESSIAN_ASYMMETRY_REJECT:e}"
            )));
        }
        if asym > HESSIAN_ASYMMETRY_WARN {
            log::warn!("symmetrizing hessian with relative asymmetry {asym:e}");
        }
        Ok(Self {
            value,
            gradient,
            hessian: symmetrize(&hessian),
        })
    }

    pub fn from_slices(value: f64, gradient: &[f64], hessian_rows: &[f64]) -> Result<Self> {
        let n = gradient.len();
        if hessian_rows.len() != n * n {
            return Err(Error::InvalidInput("hessian slice has wrong length".into()));
        }
        Self::new(
            value,
            DVector::from_column_slice(gradient),
            DMatrix::from_row_slice(n, n, hessian_rows),
        )
    }

    /// Jet of a constant field.
    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Self::new(value, DVector::zeros(n), DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient.norm()
    }

    /// Jet of `g(self)` for a scalar function g with derivatives (g, g', g'').
    pub fn compose(&self, g: f64, dg: f64, d2g: f64) -> Self {
        let p = &self.gradient;
        Self {
            value: g,
            gradient: p * dg,
            hessian: &self.hessian * dg + p * p.transpose() * d2g,
        }
    }
}

/// Pointwise geometric package of a radial graph in one formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameQuantities {
    /// g_ij
    pub metric: DMatrix<f64>,
    /// g^ij
    pub inverse_metric: DMatrix<f64>,
    /// γ_ik with γγ = g
    pub sqrt_metric: DMatrix<f64>,
    /// γ^ik, the inverse of γ_ik
    pub inv_sqrt_metric: DMatrix<f64>,
    /// h_ij
    pub second_fundamental_form: DMatrix<f64>,
    /// a_ij = γ^ik h_kl γ^lj
    pub curvature_matrix: DMatrix<f64>,
    /// eigenvalues of `curvature_matrix`, ascending
    pub principal_curvatures: DVector<f64>,
    /// ∂/∂ρ-component of the unit outward normal
    pub normal_radial_component: f64,
    /// τ = ⟨V, ν⟩
    pub support_function: f64,
    /// The matrix whose positivity is equivalent to strict local convexity,
    /// when the formulation has one (`∇²u + uI` or `ηI + η'γ̃∇²vγ̃`).
    pub convexity_matrix: Option<DMatrix<f64>>,
}

impl FrameQuantities {
    pub fn min_curvature(&self) -> f64 {
        self.principal_curvatures[0]
    }

    pub fn max_curvature(&self) -> f64 {
        self.principal_curvatures[self.principal_curvatures.len() - 1]
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.min_curvature() > 0.0
    }
}

fn outer(p: &DVector<f64>) -> DMatrix<f64> {
    p * p.transpose()
}

fn check_denominator(w: f64) -> Result<()> {
    if w.is_finite() && w > MIN_NORMAL_DENOMINATOR {
        Ok(())
    } else {
        Err(Error::domain("w", w, format!("w > {MIN_NORMAL_DENOMINATOR:e}")))
    }
}

/// Geometry from the radial function ρ.
pub fn frame_from_rho(model: SpaceForm, jet: &ScalarJet2) -> Result<FrameQuantities> {
    let n = jet.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let phi = model.phi(jet.value)?;
    let (f, df) = (phi.value, phi.d1);
    let p = &jet.gradient;
    let pp = outer(p);
    let grad2 = p.norm_squared();
    let w = (f * f + grad2).sqrt();
    check_denominator(w)?;

    let metric = &id * (f * f) + &pp;
    let inverse_metric = (&id - &pp / (f * f + grad2)) / (f * f);
    let inv_sqrt_metric = (&id - &pp / (w * (f + w))) / f;
    let sqrt_metric = &id * f + &pp / (f + w);
    let second_fundamental_form =
        (-&jet.hessian + &pp * (2.0 * df / f) + &id * (f * df)) * (f / w);
    let curvature_matrix =
        symmetrize(&(&inv_sqrt_metric * &second_fundamental_form * &inv_sqrt_metric));
    let principal_curvatures = sym_eigenvalues(&curvature_matrix);
    Ok(FrameQuantities {
        metric,
        inverse_metric,
        sqrt_metric,
        inv_sqrt_metric,
        second_fundamental_form,
        curvature_matrix,
        principal_curvatures,
        normal_radial_component: f / w,
        support_function: f * f / w,
        convexity_matrix: None,
    })
}

/// Geometry from u in any background described by warp data at u.
pub(crate) fn frame_from_warp(jet: &ScalarJet2, warp: &Warp) -> Result<FrameQuantities> {
    let n = jet.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let Warp { phi: f, dzeta: z1, .. } = *warp;
    let p = &jet.gradient;
    let zpp = outer(p) * (z1 * z1);
    let w = (f * f + z1 * z1 * p.norm_squared()).sqrt();
    check_denominator(w)?;

    let metric = &id * (f * f) + &zpp;
    let inverse_metric = (&id - &zpp / (w * w)) / (f * f);
    let inv_sqrt_metric = (&id - &zpp / (w * (f + w))) / f;
    let sqrt_metric = &id * f + &zpp / (f + w);
    let convexity = &jet.hessian + &id * jet.value;
    let scale = -z1 * f / w;
    let second_fundamental_form = &convexity * scale;
    let curvature_matrix =
        symmetrize(&(&inv_sqrt_metric * &convexity * &inv_sqrt_metric * scale));
    let principal_curvatures = sym_eigenvalues(&curvature_matrix);
    Ok(FrameQuantities {
        metric,
        inverse_metric,
        sqrt_metric,
        inv_sqrt_metric,
        second_fundamental_form,
        curvature_matrix,
        principal_curvatures,
        normal_radial_component: f / w,
        support_function: f * f / w,
        convexity_matrix: Some(convexity),
    })
}

/// Geometry from u, where ρ = ζ(u).
pub fn frame_from_u(model: SpaceForm, jet: &ScalarJet2) -> Result<FrameQuantities> {
    let warp = model.warp_at_u(jet.value)?;
    frame_from_warp(jet, &warp)
}

/// Geometry from v, where u = η(v).
pub fn frame_from_v(model: SpaceForm, jet: &ScalarJet2) -> Result<FrameQuantities> {
    let n = jet.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let eta = model.eta(jet.value)?;
    let p = &jet.gradient;
    let pp = outer(p);
    let w = (1.0 + p.norm_squared()).sqrt();
    check_denominator(w)?;

    let gamma_tilde = &id - &pp / (w * (1.0 + w));
    let inv_sqrt_metric = &gamma_tilde * eta.d1;
    let sqrt_metric = (&id + &pp / (1.0 + w)) / eta.d1;
    let metric = &sqrt_metric * &sqrt_metric;
    let inverse_metric = &inv_sqrt_metric * &inv_sqrt_metric;
    let second_fundamental_form = (&jet.hessian * eta.d1 + &pp * eta.value + &id * eta.value)
        / (eta.d1 * eta.d1 * w);
    let convexity =
        symmetrize(&(&id * eta.value + &gamma_tilde * &jet.hessian * &gamma_tilde * eta.d1));
    let curvature_matrix = &convexity / w;
    let principal_curvatures = sym_eigenvalues(&curvature_matrix);
    // φ(ρ) = 1/η'(v) along ρ = ζ(η(v)), so |∇ρ| = φ|∇v|.
    Ok(FrameQuantities {
        metric,
        inverse_metric,
        sqrt_metric,
        inv_sqrt_metric,
        second_fundamental_form,
        curvature_matrix,
        principal_curvatures,
        normal_radial_component: 1.0 / w,
        support_function: 1.0 / (eta.d1 * w),
        convexity_matrix: Some(convexity),
    })
}

/// γ̃ of the t-deformed background: `I − ppᵀ / (√(s+P)(√s + √(s+P)))`, s = u² + t².
pub(crate) fn deformed_gamma_tilde(t: f64, u: f64, p: &DVector<f64>) -> DMatrix<f64> {
    let n = p.len();
    let s = u * u + t * t;
    let big = (s + p.norm_squared()).sqrt();
    DMatrix::identity(n, n) - outer(p) / (big * (s.sqrt() + big))
}

/// Geometry of the graph of u in the background `dρ² + (φᵗ)²σ`.
///
/// The curvature matrix uses the reduced expression
/// `a^t = (1 + |∇u|²/(u²+t²))^{-1/2} γ̃ (∇²u + uI) γ̃`.
pub fn frame_deformed(t: f64, jet: &ScalarJet2) -> Result<FrameQuantities> {
    let warp = deformed_warp_at_u(t, jet.value)?;
    let mut frame = frame_from_warp(jet, &warp)?;
    let u = jet.value;
    let gt = deformed_gamma_tilde(t, u, &jet.gradient);
    let m = frame
        .convexity_matrix
        .as_ref()
        .expect("u-form frames carry the convexity matrix");
    let factor = (1.0 + jet.gradient.norm_squared() / (u * u + t * t)).powf(-0.5);
    frame.curvature_matrix = symmetrize(&(&gt * m * &gt * factor));
    frame.principal_curvatures = sym_eigenvalues(&frame.curvature_matrix);
    Ok(frame)
}

/// Support function τ and the primitive Φ(ρ) = ∫₀^ρ φ.
pub fn support_and_primitive(model: SpaceForm, jet: &ScalarJet2) -> Result<(f64, f64)> {
    let phi = model.phi(jet.value)?.value;
    let w = (phi * phi + jet.gradient.norm_squared()).sqrt();
    check_denominator(w)?;
    Ok((phi * phi / w, model.primitive(jet.value)?))
}
