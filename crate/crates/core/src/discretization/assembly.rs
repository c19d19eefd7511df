//! Global nonlinear residual and sparse Jacobian in the ũ = μu unknowns.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::{DMatrix, Matrix2, Vector2};
use rayon::prelude::*;

use super::chart::FrameJet;
use super::grid::{DiscreteField, PolarDomain};
use crate::curvature::CurvatureFunction;
use crate::error::{Error, Result};
use crate::linalg::sym2_eigenvalues;
use crate::operator::{evaluate_g, linearize_g};
use crate::spaceform::Ambient;

/// Right-hand side RHS(z, u) evaluated at an interior node: (value, ∂/∂u).
pub trait RightHandSide: Sync {
    fn eval(&self, node: usize, u: f64) -> Result<(f64, f64)>;
}

impl<F> RightHandSide for F
where
    F: Fn(usize, f64) -> Result<(f64, f64)> + Sync,
{
    fn eval(&self, node: usize, u: f64) -> Result<(f64, f64)> {
        self(node, u)
    }
}

/// Everything needed to evaluate G[u] − RHS on a grid.
#[derive(Clone, Copy)]
pub struct DiscreteOperator<'a> {
    pub domain: &'a PolarDomain,
    pub ambient: Ambient,
    pub spec: &'a CurvatureFunction,
}

/// Square sparse matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(c, v)| v * x[*c]).sum())
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Solves A x = b by sparse LU.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| Triplet::new(r, c, v)))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        Ok(out)
    }
}

/// Smallest eigenvalue of D²ũ over interior nodes and where it occurs.
/// Positive exactly when the field is strictly locally convex.
pub fn convexity_witness(domain: &PolarDomain, field: &DiscreteField) -> Result<(f64, usize)> {
    let mut best = (f64::INFINITY, usize::MAX);
    for i in domain.interior() {
        let h = domain.chart_derivatives(&field.values, i)?.hessian;
        let lam = sym2_eigenvalues(h[(0, 0)], h[(0, 1)], h[(1, 1)]).0;
        if lam < best.0 || !lam.is_finite() {
            best = (lam, i);
        }
    }
    Ok(best)
}

fn require_convex(jet: &FrameJet, hessian: &Matrix2<f64>, node: usize) -> Result<()> {
    let lam = sym2_eigenvalues(hessian[(0, 0)], hessian[(0, 1)], hessian[(1, 1)]).0;
    if lam > 0.0 && jet.u.is_finite() {
        Ok(())
    } else {
        Err(Error::NotConvex {
            node,
            min_eigenvalue: lam,
        })
    }
}

impl DiscreteOperator<'_> {
    /// Residual G[u] − RHS at interior nodes and ũ − ũ_boundary on the boundary.
    pub fn residual(
        &self,
        field: &DiscreteField,
        boundary: &DiscreteField,
        rhs: &dyn RightHandSide,
    ) -> Result<Vec<f64>> {
        let d = self.domain;
        (0..d.len())
            .into_par_iter()
            .map(|i| {
                if d.node(i).boundary {
                    return Ok(field.values[i] - boundary.values[i]);
                }
                let cd = d.chart_derivatives(&field.values, i)?;
                let jet = super::chart::gnomonic_frame_jet(d.node(i).y, &cd);
                require_convex(&jet, &cd.hessian, i)?;
                let g = evaluate_g(self.ambient, self.spec, &jet.to_scalar_jet()?)
                    .map_err(|e| tag_node(e, i))?;
                let (r, _) = rhs.eval(i, jet.u)?;
                Ok(g - r)
            })
            .collect()
    }

    /// G at every interior node (zero on the boundary).
    pub fn operator_values(&self, field: &DiscreteField) -> Result<Vec<f64>> {
        let d = self.domain;
        (0..d.len())
            .into_par_iter()
            .map(|i| {
                if d.node(i).boundary {
                    return Ok(0.0);
                }
                let cd = d.chart_derivatives(&field.values, i)?;
                let jet = super::chart::gnomonic_frame_jet(d.node(i).y, &cd);
                require_convex(&jet, &cd.hessian, i)?;
                evaluate_g(self.ambient, self.spec, &jet.to_scalar_jet()?).map_err(|e| tag_node(e, i))
            })
            .collect()
    }

    /// Residual together with its exact Jacobian with respect to ũ.
    pub fn residual_and_jacobian(
        &self,
        field: &DiscreteField,
        boundary: &DiscreteField,
        rhs: &dyn RightHandSide,
    ) -> Result<(Vec<f64>, SparseMatrix)> {
        let d = self.domain;
        let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..d.len())
            .into_par_iter()
            .map(|i| self.row(i, field, boundary, rhs))
            .collect::<Result<_>>()?;
        let (residual, rows): (Vec<f64>, Vec<_>) = rows.into_iter().unzip();
        Ok((residual, SparseMatrix { n: d.len(), rows }))
    }

    fn row(
        &self,
        i: usize,
        field: &DiscreteField,
        boundary: &DiscreteField,
        rhs: &dyn RightHandSide,
    ) -> Result<(f64, Vec<(usize, f64)>)> {
        let d = self.domain;
        let node = d.node(i);
        if node.boundary {
            return Ok((field.values[i] - boundary.values[i], vec![(i, 1.0)]));
        }
        let cd = d.chart_derivatives(&field.values, i)?;
        let y = node.y;
        let m = node.mu;
        let jet = super::chart::gnomonic_frame_jet(y, &cd);
        require_convex(&jet, &cd.hessian, i)?;
        let lin = linearize_g(self.ambient, self.spec, &jet.to_scalar_jet()?)
            .map_err(|e| tag_node(e, i))?;
        let (r, r_u) = rhs.eval(i, jet.u)?;

        let e = super::chart::frame(y);
        let gij = to_matrix2(&lin.second_order);
        let gs = Vector2::new(lin.first_order[0], lin.first_order[1]);
        // hessian slot: E H E / μ − u I; gradient slot: E (Dũ/μ − ũ y/μ³); value: ũ/μ
        let d_hess = e * gij * e / m;
        let d_grad = e * gs / m;
        let d_value = (lin.zeroth_order - gij.trace() - r_u) / m - gs.dot(&(e * y)) / (m * m * m);

        let mut row: Vec<(usize, f64)> = Vec::with_capacity(node.stencil.len() + 1);
        let mut diag_seen = false;
        for (col, w) in &node.stencil {
            let mut v = d_grad[0] * w[0]
                + d_grad[1] * w[1]
                + d_hess[(0, 0)] * w[2]
                + 2.0 * d_hess[(0, 1)] * w[3]
                + d_hess[(1, 1)] * w[4];
            if *col == i {
                v += d_value;
                diag_seen = true;
            }
            row.push((*col, v));
        }
        if !diag_seen {
            row.push((i, d_value));
        }
        Ok((lin.operator_value - r, row))
    }
}

fn to_matrix2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn tag_node(e: Error, node: usize) -> Error {
    match e {
        Error::ConeViolation(msg) => Error::ConeViolation(format!("node {node}: {msg}")),
        other => other,
    }
}
