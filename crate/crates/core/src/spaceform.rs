//! Space-form models `dρ² + φ(ρ)² σ` and the scalar changes of variable
//! between the radial function ρ, the curvature-adapted variable u and the
//! existence variable v.
//!
//! | K  | φ(ρ)   | ρ = ζ(u)            | u = η(v) | ξ(v)     |
//! |----|--------|---------------------|----------|----------|
//! | 0  | ρ      | 1/u                 | eᵛ       | e²ᵛ      |
//! | 1  | sin ρ  | arccot u            | sinh v   | –        |
//! | −1 | sinh ρ | ½ ln((u+1)/(u−1))   | cosh v   | sinh v   |
//!
//! The t-deformation `φᵗ(ρ) = sin(tρ)/t`, `ζᵗ(u) = arccot(u/t)/t` joins the
//! Euclidean model (t = 0) to the hemisphere (t = 1).

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Below this deformation parameter the analytic t → 0 branch is used.
pub const DEFORMATION_LIMIT_THRESHOLD: f64 = 1e-8;

/// A scalar function value with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Triple {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }
}

/// Warping data needed by the u-form geometry at one value of u:
/// φ and φ' evaluated at ρ = ζ(u), together with ζ'(u) and ζ''(u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Warp {
    pub phi: f64,
    pub dphi: f64,
    pub dzeta: f64,
    pub d2zeta: f64,
}

/// Branch of arccot with range (0, π).
pub fn arccot(x: f64) -> f64 {
    if x > 0.0 {
        (1.0 / x).atan()
    } else {
        FRAC_PI_2 - x.atan()
    }
}

/// One of the three model space forms, identified by its sectional curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct SpaceForm {
    curvature_sign: i8,
}

impl TryFrom<i32> for SpaceForm {
    type Error = Error;
    fn try_from(k: i32) -> Result<Self> {
        SpaceForm::new(k)
    }
}

impl From<SpaceForm> for i32 {
    fn from(m: SpaceForm) -> i32 {
        m.curvature_sign()
    }
}

impl SpaceForm {
    pub const EUCLIDEAN: SpaceForm = SpaceForm { curvature_sign: 0 };
    pub const SPHERICAL: SpaceForm = SpaceForm { curvature_sign: 1 };
    pub const HYPERBOLIC: SpaceForm = SpaceForm { curvature_sign: -1 };

    pub fn new(curvature_sign: i32) -> Result<Self> {
        match curvature_sign {
            0 => Ok(Self::EUCLIDEAN),
            1 => Ok(Self::SPHERICAL),
            -1 => Ok(Self::HYPERBOLIC),
            k => Err(Error::InvalidInput(format!(
                "curvature sign must be -1, 0 or 1, got {k}"
            ))),
        }
    }

    pub fn all() -> [SpaceForm; 3] {
        [Self::HYPERBOLIC, Self::EUCLIDEAN, Self::SPHERICAL]
    }

    pub fn curvature_sign(&self) -> i32 {
        self.curvature_sign as i32
    }

    /// Supremum of the admissible radial range.
    pub fn rho_upper(&self) -> f64 {
        if self.curvature_sign == 1 {
            FRAC_PI_2
        } else {
            f64::INFINITY
        }
    }

    /// Infimum of the admissible range of u.
    pub fn u_lower(&self) -> f64 {
        if self.curvature_sign == -1 {
            1.0
        } else {
            0.0
        }
    }

    /// Infimum of the admissible range of v.
    pub fn v_lower(&self) -> f64 {
        if self.curvature_sign == 0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    fn check_rho(&self, rho: f64) -> Result<()> {
        if !(rho > 0.0) {
            return Err(Error::domain("rho", rho, "rho > 0"));
        }
        if !(rho < self.rho_upper()) {
            return Err(Error::domain(
                "rho",
                rho,
                format!("rho < {} (K = {})", self.rho_upper(), self.curvature_sign),
            ));
        }
        Ok(())
    }

    pub fn check_u(&self, u: f64) -> Result<()> {
        if u > self.u_lower() && u.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(
                "u",
                u,
                format!("u > {} (K = {})", self.u_lower(), self.curvature_sign),
            ))
        }
    }

    pub fn check_v(&self, v: f64) -> Result<()> {
        if v > self.v_lower() && v.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(
                "v",
                v,
                format!("v > {} (K = {})", self.v_lower(), self.curvature_sign),
            ))
        }
    }

    /// Warping function φ(ρ) with φ' and φ''.
    pub fn phi(&self, rho: f64) -> Result<Triple> {
        self.check_rho(rho)?;
        Ok(match self.curvature_sign {
            0 => Triple::new(rho, 1.0, 0.0),
            1 => {
                let (s, c) = rho.sin_cos();
                Triple::new(s, c, -s)
            }
            _ => Triple::new(rho.sinh(), rho.cosh(), rho.sinh()),
        })
    }

    /// ρ = ζ(u) with ζ'(u) and ζ''(u).
    pub fn zeta(&self, u: f64) -> Result<Triple> {
        self.check_u(u)?;
        Ok(match self.curvature_sign {
            0 => Triple::new(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)),
            1 => {
                let s = 1.0 + u * u;
                Triple::new(arccot(u), -1.0 / s, 2.0 * u / (s * s))
            }
            _ => {
                let s = u * u - 1.0;
                Triple::new((1.0 / u).atanh(), -1.0 / s, 2.0 * u / (s * s))
            }
        })
    }

    /// Inverse of ζ: the u-value of a radial height ρ.
    pub fn zeta_inverse(&self, rho: f64) -> Result<f64> {
        self.check_rho(rho)?;
        Ok(match self.curvature_sign {
            0 => 1.0 / rho,
            1 => 1.0 / rho.tan(),
            _ => 1.0 / rho.tanh(),
        })
    }

    /// u = η(v) with η'(v) and η''(v).
    pub fn eta(&self, v: f64) -> Result<Triple> {
        self.check_v(v)?;
        Ok(match self.curvature_sign {
            0 => {
                let e = v.exp();
                Triple::new(e, e, e)
            }
            1 => Triple::new(v.sinh(), v.cosh(), v.sinh()),
            _ => Triple::new(v.cosh(), v.sinh(), v.cosh()),
        })
    }

    /// η'''(v); needed when differentiating the v-form operator in v.
    pub(crate) fn eta_third(&self, v: f64) -> f64 {
        match self.curvature_sign {
            0 => v.exp(),
            1 => v.cosh(),
            _ => v.sinh(),
        }
    }

    /// Inverse of η.
    pub fn eta_inverse(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(match self.curvature_sign {
            0 => u.ln(),
            1 => u.asinh(),
            _ => u.acosh(),
        })
    }

    /// ξ(v) and ξ'(v) used by the auxiliary continuation paths (K = 0, −1 only).
    pub fn xi(&self, v: f64) -> Result<(f64, f64)> {
        match self.curvature_sign {
            0 => {
                self.check_v(v)?;
                let e = (2.0 * v).exp();
                Ok((e, 2.0 * e))
            }
            -1 => {
                self.check_v(v)?;
                Ok((v.sinh(), v.cosh()))
            }
            k => Err(Error::Unsupported {
                curvature_sign: k as i32,
                what: "xi is defined for K = 0 and K = -1",
            }),
        }
    }

    /// ξ(η⁻¹(u)) and its derivative in u.
    pub fn xi_of_u(&self, u: f64) -> Result<(f64, f64)> {
        match self.curvature_sign {
            0 => {
                self.check_u(u)?;
                Ok((u * u, 2.0 * u))
            }
            -1 => {
                self.check_u(u)?;
                let s = (u * u - 1.0).sqrt();
                Ok((s, u / s))
            }
            k => Err(Error::Unsupported {
                curvature_sign: k as i32,
                what: "xi is defined for K = 0 and K = -1",
            }),
        }
    }

    /// Φ(ρ) = ∫₀^ρ φ(r) dr.
    pub fn primitive(&self, rho: f64) -> Result<f64> {
        self.check_rho(rho)?;
        Ok(match self.curvature_sign {
            0 => 0.5 * rho * rho,
            // 1 − cos ρ = 2 sin²(ρ/2),
            1 => 2.0 * (0.5 * rho).sin().powi(2),
            _ => 2.0 * (0.5 * rho).sinh().powi(2),
        })
    }

    /// φ, φ' at ρ = ζ(u) together with ζ'(u), ζ''(u).
    pub fn warp_at_u(&self, u: f64) -> Result<Warp> {
        let z = self.zeta(u)?;
        // φ(ζ(u)) and φ'(ζ(u)) in closed form; avoids the round trip through ρ.
        let (phi, dphi) = match self.curvature_sign {
            0 => (1.0 / u, 1.0),
            1 => {
                let r = (1.0 + u * u).sqrt();
                (1.0 / r, u / r)
            }
            _ => {
                let r = (u * u - 1.0).sqrt();
                (1.0 / r, u / r)
            }
        };
        Ok(Warp {
            phi,
            dphi,
            dzeta: z.d1,
            d2zeta: z.d2,
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain("t", t, "0 <= t <= 1"))
    }
}

/// φᵗ(ρ) = sin(tρ)/t and its derivatives; φ⁰(ρ) = ρ.
pub fn deformed_phi(t: f64, rho: f64) -> Result<Triple> {
    check_t(t)?;
    if !(rho > 0.0) {
        return Err(Error::domain("rho", rho, "rho > 0"));
    }
    if t < DEFORMATION_LIMIT_THRESHOLD {
        return Ok(Triple::new(rho, 1.0, 0.0));
    }
    if !(t * rho < FRAC_PI_2) {
        return Err(Error::domain("rho", rho, format!("rho < pi/(2t) with t = {t}")));
    }
    let (s, c) = (t * rho).sin_cos();
    Ok(Triple::new(s / t, c, -t * s))
}

/// ζᵗ(u) = arccot(u/t)/t and its derivatives; ζ⁰(u) = 1/u.
pub fn deformed_zeta(t: f64, u: f64) -> Result<Triple> {
    check_t(t)?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain("u", u, "u > 0"));
    }
    let s = u * u + t * t;
    let value = if t < DEFORMATION_LIMIT_THRESHOLD {
        1.0 / u
    } else {
        arccot(u / t) / t
    };
    Ok(Triple::new(value, -1.0 / s, 2.0 * u / (s * s)))
}

/// Both deformed transforms evaluated at the same argument.
pub fn deformed_transforms(t: f64, x: f64) -> Result<(Triple, Triple)> {
    Ok((deformed_phi(t, x)?, deformed_zeta(t, x)?))
}

/// Warp data of the t-deformed background; φᵗ(ζᵗ(u)) = (u² + t²)^{-1/2}.
pub fn deformed_warp_at_u(t: f64, u: f64) -> Result<Warp> {
    let z = deformed_zeta(t, u)?;
    let r = (u * u + t * t).sqrt();
    Ok(Warp {
        phi: 1.0 / r,
        dphi: u / r,
        dzeta: z.d1,
        d2zeta: z.d2,
    })
}

/// The background geometry an operator is evaluated in: one of the model
/// space forms, or the t-deformed metric joining K = 0 to K = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ambient {
    Model(SpaceForm),
    Deformed(f64),
}

impl Ambient {
    pub fn warp_at_u(&self, u: f64) -> Result<Warp> {
        match *self {
            Ambient::Model(m) => m.warp_at_u(u),
            Ambient::Deformed(t) => deformed_warp_at_u(t, u),
        }
    }

    pub fn u_lower(&self) -> f64 {
        match *self {
            Ambient::Model(m) => m.u_lower(),
            Ambient::Deformed(_) => 0.0,
        }
    }
}

impl From<SpaceForm> for Ambient {
    fn from(m: SpaceForm) -> Self {
        Ambient::Model(m)
    }
}
