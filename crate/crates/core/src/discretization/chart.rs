//! Coordinate charts on S² and the conversion of chart derivatives of
//! ũ = μu into orthonormal-frame jets of u.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::ScalarJet2;

/// Gnomonic chart: radial projection of the open hemisphere around `center`
/// onto its tangent plane. `e1`, `e2` span the tangent plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnomonicChart {
    pub center: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
}

impl GnomonicChart {
    pub fn new(center: Vector3<f64>) -> Result<Self> {
        let norm = center.norm();
        if !(norm.is_finite() && norm > 1e-12) {
            return Err(Error::InvalidInput("chart center must be a nonzero vector".into()));
        }
        let c = center / norm;
        // First tangent vector from the coordinate axis least aligned with c.
        let axis = if c.x.abs() <= c.y.abs() && c.x.abs() <= c.z.abs() {
            Vector3::x()
        } else if c.y.abs() <= c.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let e1 = (axis - c * c.dot(&axis)).normalize();
        let e2 = c.cross(&e1);
        Ok(Self { center: c, e1, e2 })
    }

    /// Point of S² with chart coordinates y.
    pub fn point(&self, y: Vector2<f64>) -> Vector3<f64> {
        (self.center + self.e1 * y.x + self.e2 * y.y) / mu(y)
    }

    /// Chart coordinates of a point in the open hemisphere around the center.
    pub fn coordinates(&self, z: Vector3<f64>) -> Result<Vector2<f64>> {
        let h = z.dot(&self.center);
        if !(h > 0.0) {
            return Err(Error::HemisphereViolation(h));
        }
        Ok(Vector2::new(z.dot(&self.e1) / h, z.dot(&self.e2) / h))
    }
}

/// μ = √(1 + |y|²).
pub fn mu(y: Vector2<f64>) -> f64 {
    (1.0 + y.norm_squared()).sqrt()
}

/// σ_ij = μ⁻²(δ_ij − y_i y_j / μ²).
pub fn metric(y: Vector2<f64>) -> Matrix2<f64> {
    let m2 = 1.0 + y.norm_squared();
    (Matrix2::identity() - y * y.transpose() / m2) / m2
}

/// σ^ij = μ²(δ_ij + y_i y_j).
pub fn inverse_metric(y: Vector2<f64>) -> Matrix2<f64> {
    (Matrix2::identity() + y * y.transpose()) * (1.0 + y.norm_squared())
}

/// Γ^k_ij = −(δ_ik y_j + δ_jk y_i)/μ², indexed `[k][(i, j)]`.
pub fn christoffel(y: Vector2<f64>) -> [Matrix2<f64>; 2] {
    let m2 = 1.0 + y.norm_squared();
    std::array::from_fn(|k| {
        Matrix2::from_fn(|i, j| {
            let dik = if i == k { 1.0 } else { 0.0 };
            let djk = if j == k { 1.0 } else { 0.0 };
            -(dik * y[j] + djk * y[i]) / m2
        })
    })
}

/// σ^{1/2} = μ⁻¹(I − yyᵀ/(μ(μ+1))).
pub fn sqrt_metric(y: Vector2<f64>) -> Matrix2<f64> {
    let m = mu(y);
    (Matrix2::identity() - y * y.transpose() / (m * (m + 1.0))) / m
}

/// σ^{-1/2} = μ(I + yyᵀ/(μ+1)); its columns are an orthonormal frame.
pub fn frame(y: Vector2<f64>) -> Matrix2<f64> {
    let m = mu(y);
    (Matrix2::identity() + y * y.transpose() / (m + 1.0)) * m
}

/// Value, gradient and Hessian of ũ in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartDerivatives {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

/// Frame-level pieces of the u-jet built from gnomonic derivatives of ũ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameJet {
    pub u: f64,
    pub gradient: Vector2<f64>,
    /// ∇²u + uI in the orthonormal frame.
    pub convexity: Matrix2<f64>,
}

impl FrameJet {
    pub fn to_scalar_jet(&self) -> Result<ScalarJet2> {
        let hess = self.convexity - Matrix2::identity() * self.u;
        ScalarJet2::new(
            self.u,
            DVector::from_column_slice(self.gradient.as_slice()),
            DMatrix::from_column_slice(2, 2, hess.as_slice()),
        )
    }
}

/// Uses ∇²u + uσ = μ⁻¹ D²ũ and u = ũ/μ, then rotates into the frame σ^{-1/2}.
pub fn gnomonic_frame_jet(y: Vector2<f64>, d: &ChartDerivatives) -> FrameJet {
    let m = mu(y);
    let e = frame(y);
    let u = d.value / m;
    let du = d.gradient / m - y * (d.value / (m * m * m));
    FrameJet {
        u,
        gradient: e * du,
        convexity: e * d.hessian * e / m,
    }
}

/// Projective chart used for the cross-chart consistency check: coordinates
/// x on the plane through the south pole, z = (4x, |x|² − 4)/(|x|² + 4).
pub mod projective {
    use super::*;

    /// μ = 4 + |x|².
    pub fn mu(x: Vector2<f64>) -> f64 {
        4.0 + x.norm_squared()
    }

    pub fn point(x: Vector2<f64>) -> Vector3<f64> {
        let m = mu(x);
        Vector3::new(4.0 * x.x, 4.0 * x.y, x.norm_squared() - 4.0) / m
    }

    /// σ_ij = 16 δ_ij / μ².
    pub fn metric(x: Vector2<f64>) -> Matrix2<f64> {
        Matrix2::identity() * (16.0 / (mu(x) * mu(x)))
    }

    /// Γ^k_ij = −(2/μ)(δ_ik x_j + δ_jk x_i − δ_ij x_k), indexed `[k][(i, j)]`.
    pub fn christoffel(x: Vector2<f64>) -> [Matrix2<f64>; 2] {
        let m = mu(x);
        std::array::from_fn(|k| {
            Matrix2::from_fn(|i, j| {
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                -2.0 / m * (d(i, k) * x[j] + d(j, k) * x[i] - d(i, j) * x[k])
            })
        })
    }

    /// ∇²u + uσ = μ⁻¹ D²ũ + 2δ/μ² (ũ − x·Dũ), rotated by the conformal frame μ/4.
    pub fn frame_jet(x: Vector2<f64>, d: &ChartDerivatives) -> FrameJet {
        let m = mu(x);
        let u = d.value / m;
        let du = d.gradient / m - x * (2.0 * d.value / (m * m));
        let chart = d.hessian / m
            + Matrix2::identity() * (2.0 / (m * m) * (d.value - x.dot(&d.gradient)));
        let s = m / 4.0;
        FrameJet {
            u,
            gradient: du * s,
            convexity: chart * (s * s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn metric_examples() {
        let s = metric(Vector2::new(1.0, 0.0));
        assert_relative_eq!(s, Matrix2::new(0.25, 0.0, 0.0, 0.5), epsilon = 1e-15);
        assert_eq!(metric(Vector2::zeros()), Matrix2::identity());
        assert_eq!(christoffel(Vector2::zeros())[0], Matrix2::zeros());
    }

    #[test]
    fn chart_identities() {
        for y in [Vector2::new(0.3, -0.7), Vector2::new(1.2, 0.4), Vector2::new(-0.05, 0.0)] {
            let s = sqrt_metric(y);
            assert_relative_eq!(s * s, metric(y), epsilon = 1e-13);
            assert_relative_eq!(frame(y) * s, Matrix2::identity(), epsilon = 1e-13);
            assert_relative_eq!(metric(y) * inverse_metric(y), Matrix2::identity(), epsilon = 1e-13);
            let e = frame(y);
            assert_relative_eq!(e.transpose() * metric(y) * e, Matrix2::identity(), epsilon = 1e-13);
        }
    }

    #[test]
    fn chart_point_round_trip() {
        let chart = GnomonicChart::new(Vector3::new(0.2, -0.5, 0.8)).unwrap();
        let y = Vector2::new(0.4, -0.3);
        let z = chart.point(y);
        assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(chart.coordinates(z).unwrap(), y, epsilon = 1e-14);
        assert!(chart.coordinates(-chart.center).is_err());
        let north = GnomonicChart::new(Vector3::z()).unwrap();
        assert_relative_eq!(north.point(Vector2::zeros()), Vector3::z(), epsilon = 1e-15);
    }

    #[test]
    fn pulled_back_metric_matches_closed_form() {
        let chart = GnomonicChart::new(Vector3::new(0.0, 0.6, 0.8)).unwrap();
        let y = Vector2::new(0.5, 0.2);
        let h = 1e-6;
        let dz: Vec<Vector3<f64>> = (0..2)
            .map(|a| {
                let mut yp = y;
                let mut ym = y;
                yp[a] += h;
                ym[a] -= h;
                (chart.point(yp) - chart.point(ym)) / (2.0 * h)
            })
            .collect();
        let g = Matrix2::from_fn(|a, b| dz[a].dot(&dz[b]));
        assert_relative_eq!(g, metric(y), epsilon = 1e-9);

        let x = Vector2::new(0.7, -1.1);
        let dz: Vec<Vector3<f64>> = (0..2)
            .map(|a| {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                (projective::point(xp) - projective::point(xm)) / (2.0 * h)
            })
            .collect();
        let g = Matrix2::from_fn(|a, b| dz[a].dot(&dz[b]));
        assert_relative_eq!(g, projective::metric(x), epsilon = 1e-9);
    }
}
