//! Exact chart jets of fields given by expressions in (y1, y2, z1, z2, z3).

use nalgebra::{Matrix2, Vector2};

use super::chart::{self, ChartDerivatives, FrameJet, GnomonicChart};
use crate::error::{Error, Result};
use crate::expr::{Expression, Node, Var};

/// ũ = μ·u(y, z(y)) with its first and second chart derivatives as
/// symbolic trees in y1, y2.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticField {
    u: Node,
    tilde: Node,
    grad: [Node; 2],
    hess: [[Node; 2]; 2],
}

const Y: [Var; 2] = [Var::Y1, Var::Y2];

fn parse_y(text: &str) -> Node {
    Expression::parse(text, &Y)
        .expect("internal chart expression parses")
        .node()
        .clone()
}

impl AnalyticField {
    fn build(expr: &Expression, z: [Node; 3], mu: Node) -> Result<Self> {
        if expr.depends_on(Var::U) {
            return Err(Error::InvalidInput(
                "field expressions may not reference u".into(),
            ));
        }
        let mut u = expr.node().clone();
        for (v, zi) in [Var::Z1, Var::Z2, Var::Z3].into_iter().zip(z) {
            u = u.substitute(v, &zi);
        }
        let tilde = Node::Mul(Box::new(mu), Box::new(u.clone()));
        let grad = [tilde.diff(Var::Y1), tilde.diff(Var::Y2)];
        let hess = [
            [grad[0].diff(Var::Y1), grad[0].diff(Var::Y2)],
            [grad[1].diff(Var::Y1), grad[1].diff(Var::Y2)],
        ];
        Ok(Self { u, tilde, grad, hess })
    }

    /// Field on the gnomonic chart of `chart`.
    pub fn gnomonic(expr: &Expression, chart: &GnomonicChart) -> Result<Self> {
        let (c, e1, e2) = (chart.center, chart.e1, chart.e2);
        let z = std::array::from_fn(|i| {
            parse_y(&format!(
                "({:?} + y1 * {:?} + y2 * {:?}) / sqrt(1 + y1^2 + y2^2)",
                c[i], e1[i], e2[i]
            ))
        });
        Self::build(expr, z, parse_y("sqrt(1 + y1^2 + y2^2)"))
    }

    /// Field on the projective chart, with y1, y2 playing the role of x1, x2.
    pub fn projective(expr: &Expression) -> Result<Self> {
        let z = [
            parse_y("4 * y1 / (4 + y1^2 + y2^2)"),
            parse_y("4 * y2 / (4 + y1^2 + y2^2)"),
            parse_y("(y1^2 + y2^2 - 4) / (4 + y1^2 + y2^2)"),
        ];
        Self::build(expr, z, parse_y("4 + y1^2 + y2^2"))
    }

    fn vars(y: Vector2<f64>) -> [f64; 6] {
        [y.x, y.y, 0.0, 0.0, 0.0, 0.0]
    }

    pub fn u(&self, y: Vector2<f64>) -> f64 {
        self.u.eval(&Self::vars(y))
    }

    pub fn chart_derivatives(&self, y: Vector2<f64>) -> ChartDerivatives {
        let v = Self::vars(y);
        let h01 = 0.5 * (self.hess[0][1].eval(&v) + self.hess[1][0].eval(&v));
        ChartDerivatives {
            value: self.tilde.eval(&v),
            gradient: Vector2::new(self.grad[0].eval(&v), self.grad[1].eval(&v)),
            hessian: Matrix2::new(self.hess[0][0].eval(&v), h01, h01, self.hess[1][1].eval(&v)),
        }
    }

    /// Orthonormal-frame jet on the gnomonic chart.
    pub fn frame_jet(&self, y: Vector2<f64>) -> FrameJet {
        chart::gnomonic_frame_jet(y, &self.chart_derivatives(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    #[test]
    fn constant_field_has_convexity_matrix_c_identity() {
        let chart = GnomonicChart::new(Vector3::z()).unwrap();
        let f = AnalyticField::gnomonic(&Expression::constant(1.7), &chart).unwrap();
        for y in [Vector2::new(0.0, 0.0), Vector2::new(0.4, -0.2)] {
            let j = f.frame_jet(y);
            assert_relative_eq!(j.u, 1.7, epsilon = 1e-14);
            assert_relative_eq!(j.gradient.norm(), 0.0, epsilon = 1e-14);
            assert_relative_eq!(j.convexity, Matrix2::identity() * 1.7, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadratic_at_origin() {
        // ũ = 1 + q(y) with u(0) = 1 and σ(0) = I gives M(0) = D²q
        let chart = GnomonicChart::new(Vector3::z()).unwrap();
        let e = Expression::parse(
            "(1 + 0.3*y1^2 + 0.2*y1*y2 + 0.5*y2^2) / sqrt(1 + y1^2 + y2^2)",
            &[Var::Y1, Var::Y2],
        )
        .unwrap();
        let f = AnalyticField::gnomonic(&e, &chart).unwrap();
        let j = f.frame_jet(Vector2::zeros());
        assert_relative_eq!(j.convexity, Matrix2::new(0.6, 0.2, 0.2, 1.0), epsilon = 1e-13);
    }
}
