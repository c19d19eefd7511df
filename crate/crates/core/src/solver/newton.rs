//! Damped Newton iteration with a convexity safeguard.

use serde::{Deserialize, Serialize};

use crate::discretization::{convexity_witness, DiscreteField, DiscreteOperator, RightHandSide};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Stop once the residual ∞-norm is at or below this value.
    pub tolerance: f64,
    /// Armijo fraction of the predicted decrease required to accept a step.
    pub armijo: f64,
    pub max_halvings: usize,
    /// Accepted iterates keep min-eig(D²ũ) at least this fraction of its
    /// value at the start of the iteration.
    pub safeguard_fraction: f64,
    /// Also stop when the full Newton update is below this multiple of
    /// max(1, |ũ|∞): the residual has reached its roundoff floor.
    pub step_tolerance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-10,
            armijo: 1e-4,
            max_halvings: 30,
            safeguard_fraction: 0.1,
            step_tolerance: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonRecord {
    pub iterations: usize,
    /// Residual ∞-norm before the first step and after every accepted step.
    pub residuals: Vec<f64>,
    pub halvings: usize,
    pub final_residual: f64,
    pub min_convexity: f64,
    /// Stopped on the update-size test rather than the residual tolerance.
    pub stopped_on_step: bool,
}

/// The update-size test only applies once the residual is within this
/// factor of the tolerance.
pub const ROUNDOFF_FLOOR_FACTOR: f64 = 1e4;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves `op[ũ] = rhs` with Dirichlet data from `boundary`, starting from
/// `initial` (whose boundary values are replaced by the data).
pub fn newton_solve(
    op: &DiscreteOperator,
    boundary: &DiscreteField,
    rhs: &dyn RightHandSide,
    initial: &DiscreteField,
    options: &NewtonOptions,
) -> Result<(DiscreteField, NewtonRecord)> {
    let domain = op.domain;
    let mut x = initial.clone();
    x.impose_boundary(domain, boundary);
    let (mut witness, node) = convexity_witness(domain, &x)?;
    if !(witness > 0.0) {
        return Err(Error::Precondition(format!(
            "initial field is not strictly locally convex: min eigenvalue {witness:e} at node {node}"
        )));
    }
    let mut rn = inf_norm(&op.residual(&x, boundary, rhs)?);
    if !rn.is_finite() {
        return Err(Error::Precondition("initial residual is not finite".into()));
    }
    let mut record = NewtonRecord {
        iterations: 0,
        residuals: vec![rn],
        halvings: 0,
        final_residual: rn,
        min_convexity: witness,
        stopped_on_step: false,
    };
    let fail = |reason: String, rn: f64, x: &DiscreteField| Error::NonConvergence {
        reason,
        residual: rn,
        last_iterate: x.values.clone(),
    };

    while rn > options.tolerance {
        if record.iterations == options.max_iterations {
            return Err(fail(format!("{} iterations", options.max_iterations), rn, &x));
        }
        let (r, jac) = op.residual_and_jacobian(&x, boundary, rhs)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = jac.solve(&neg)?;
        if rn <= ROUNDOFF_FLOOR_FACTOR * options.tolerance
            && inf_norm(&dx) <= options.step_tolerance * inf_norm(&x.values).max(1.0)
        {
            let cand = DiscreteField::from_tilde(x.values.iter().zip(&dx).map(|(a, d)| a + d).collect());
            if let Some((w, r_new)) = try_step(op, boundary, rhs, &cand, witness * options.safeguard_fraction) {
                x = cand;
                witness = w;
                rn = r_new;
                record.iterations += 1;
                record.residuals.push(rn);
            }
            record.stopped_on_step = true;
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for halving in 0..=options.max_halvings {
            let cand = DiscreteField::from_tilde(
                x.values.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect(),
            );
            if let Some(found) = try_step(op, boundary, rhs, &cand, witness * options.safeguard_fraction) {
                if found.1 <= (1.0 - options.armijo * alpha) * rn {
                    record.halvings += halving;
                    accepted = Some((cand, found));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((cand, (w, r_new))) = accepted else {
            return Err(fail("step damping exhausted".into(), rn, &x));
        };
        x = cand;
        witness = w;
        rn = r_new;
        record.iterations += 1;
        record.residuals.push(rn);
        log::debug!("newton {}: residual {rn:e}, step {alpha}", record.iterations);
    }
    record.final_residual = rn;
    record.min_convexity = witness;
    Ok((x, record))
}

/// Witness and residual norm of a candidate, or None if it loses convexity,
/// leaves the admissible range or violates the safeguard.
fn try_step(
    op: &DiscreteOperator,
    boundary: &DiscreteField,
    rhs: &dyn RightHandSide,
    cand: &DiscreteField,
    min_witness: f64,
) -> Option<(f64, f64)> {
    let (w, _) = convexity_witness(op.domain, cand).ok()?;
    if !(w >= min_witness && w > 0.0) {
        return None;
    }
    let rn = inf_norm(&op.residual(cand, boundary, rhs).ok()?);
    rn.is_finite().then_some((w, rn))
}
