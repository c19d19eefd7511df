//! Right-hand sides ψ(z, u), subsolutions and the subsolution check.

use serde::Serialize;

use crate::curvature::CurvatureFunction;
use crate::discretization::{convexity_witness, DiscreteField, FrameJet, GridNode, PolarDomain};
use crate::error::{Error, Result};
use crate::expr::{Expression, Var};
use crate::linalg::sym2_eigenvalues;
use crate::operator::evaluate_g;
use crate::spaceform::Ambient;

/// ψ(z, u) at a grid node together with ∂ψ/∂u.
pub trait Psi: Sync {
    fn eval(&self, node: &GridNode, u: f64) -> Result<(f64, f64)>;
}

impl<F> Psi for F
where
    F: Fn(&GridNode, f64) -> Result<(f64, f64)> + Sync,
{
    fn eval(&self, node: &GridNode, u: f64) -> Result<(f64, f64)> {
        self(node, u)
    }
}

/// ψ given as an expression in y1, y2, z1, z2, z3 and u.
#[derive(Debug, Clone)]
pub struct ExpressionPsi {
    value: Expression,
    du: Expression,
}

impl ExpressionPsi {
    pub fn new(value: Expression) -> Self {
        let du = value.diff(Var::U);
        Self { value, du }
    }

    pub fn expression(&self) -> &Expression {
        &self.value
    }
}

pub(crate) fn node_vars(node: &GridNode, u: f64) -> [f64; 6] {
    [node.y.x, node.y.y, node.z.x, node.z.y, node.z.z, u]
}

impl Psi for ExpressionPsi {
    fn eval(&self, node: &GridNode, u: f64) -> Result<(f64, f64)> {
        let v = node_vars(node, u);
        let (p, dp) = (self.value.eval(&v), self.du.eval(&v));
        if !(p.is_finite() && dp.is_finite()) {
            return Err(Error::domain("psi", p, format!("finite at node ({}, {})", node.ring, node.sector)));
        }
        Ok((p, dp))
    }
}

/// A candidate subsolution on the grid. When exact frame jets are known
/// (e.g. from an expression), the subsolution inequality is checked on them
/// rather than on finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsolution {
    pub field: DiscreteField,
    pub exact_jets: Option<Vec<FrameJet>>,
}

impl Subsolution {
    pub fn discrete(field: DiscreteField) -> Self {
        Self { field, exact_jets: None }
    }

    /// Jet at an interior node: exact when available, discrete otherwise.
    pub fn jet(&self, domain: &PolarDomain, idx: usize) -> Result<FrameJet> {
        match &self.exact_jets {
            Some(j) => Ok(j[idx]),
            None => domain.covariant_jet(&self.field.values, idx),
        }
    }

    /// G in the given background at every interior node (NaN on the boundary).
    pub fn operator_values(
        &self,
        domain: &PolarDomain,
        ambient: Ambient,
        spec: &CurvatureFunction,
    ) -> Result<Vec<f64>> {
        (0..domain.len())
            .map(|i| {
                if domain.node(i).boundary {
                    return Ok(f64::NAN);
                }
                evaluate_g(ambient, spec, &self.jet(domain, i)?.to_scalar_jet()?)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsolutionReport {
    /// G[ū] − ψ(z, ū) per node; NaN on the boundary.
    #[serde(skip)]
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub worst_node: Option<usize>,
    /// Smallest eigenvalue of D²ũ over interior nodes (finite differences).
    pub convexity_witness: f64,
    /// Smallest eigenvalue of the exact convexity matrix, when exact jets are used.
    pub exact_convexity: Option<f64>,
    pub exact_jets: bool,
    pub verdict: bool,
    pub note: Option<String>,
}

/// Margin tolerance of the subsolution inequality.
pub const SUBSOLUTION_TOLERANCE: f64 = 1e-10;

/// Node-wise margins G[ū] − ψ(z, ū) and a convexity check. Never fails:
/// problems are reported through the verdict and note.
pub fn verify_subsolution(
    domain: &PolarDomain,
    ambient: Ambient,
    spec: &CurvatureFunction,
    psi: &dyn Psi,
    sub: &Subsolution,
) -> SubsolutionReport {
    let mut report = SubsolutionReport {
        margins: vec![f64::NAN; domain.len()],
        min_margin: f64::NAN,
        worst_node: None,
        convexity_witness: f64::NAN,
        exact_convexity: None,
        exact_jets: sub.exact_jets.is_some(),
        verdict: false,
        note: None,
    };
    match convexity_witness(domain, &sub.field) {
        Ok((w, node)) => {
            report.convexity_witness = w;
            if !(w > 0.0) {
                report.note = Some(format!("cone violation: D²ũ has eigenvalue {w:e} at node {node}"));
                return report;
            }
        }
        Err(e) => {
            report.note = Some(e.to_string());
            return report;
        }
    }
    if let Some(jets) = &sub.exact_jets {
        let m = domain
            .interior()
            .map(|i| {
                let c = jets[i].convexity;
                sym2_eigenvalues(c[(0, 0)], c[(0, 1)], c[(1, 1)]).0
            })
            .fold(f64::INFINITY, f64::min);
        report.exact_convexity = Some(m);
        if !(m > 0.0) {
            report.note = Some(format!("cone violation: exact convexity eigenvalue {m:e}"));
            return report;
        }
    }
    let mut min = f64::INFINITY;
    for i in domain.interior() {
        let margin = sub
            .jet(domain, i)
            .and_then(|j| {
                let g = evaluate_g(ambient, spec, &j.to_scalar_jet()?)?;
                let (p, _) = psi.eval(domain.node(i), j.u)?;
                Ok(g - p)
            });
        match margin {
            Ok(m) => {
                report.margins[i] = m;
                if m < min {
                    min = m;
                    report.worst_node = Some(i);
                }
            }
            Err(e) => {
                report.note = Some(format!("node {i}: {e}"));
                report.worst_node = Some(i);
                return report;
            }
        }
    }
    report.min_margin = min;
    report.verdict = min >= -SUBSOLUTION_TOLERANCE;
    if !report.verdict {
        report.note = Some(format!(
            "subsolution inequality fails by {:e} at node {}",
            -min,
            report.worst_node.unwrap_or(0)
        ));
    }
    report
}
