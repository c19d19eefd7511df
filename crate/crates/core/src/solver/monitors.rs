//! Measured counterparts of the a priori bounds: C₀, C₁, K₀ and min τ.

use serde::Serialize;

use crate::discretization::{convexity_witness, DiscreteField, PolarDomain};
use crate::error::{Error, Result};
use crate::linalg::sym2_eigenvalues;
use crate::operator::frame_for;
use crate::spaceform::Ambient;

/// Grid-wide statistics of a strictly locally convex field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitors {
    pub u_min: f64,
    pub u_max: f64,
    /// Smallest C₀ with C₀⁻¹ ≤ u − u_L and u ≤ C₀.
    pub c0: f64,
    /// max |∇'u| over interior nodes.
    pub c1: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// Smallest K₀ with K₀⁻¹ ≤ κ ≤ K₀.
    pub k0: f64,
    pub min_support: f64,
    /// max |∇'²u| (spectral norm) on ∂Ω, extrapolated linearly in r from
    /// the last two interior rings.
    pub boundary_hessian: f64,
    pub convexity_witness: f64,
}

/// Monitors of `field` in the given background. Fails with a precondition
/// error when the field is not strictly locally convex.
pub fn estimate_monitors(
    domain: &PolarDomain,
    field: &DiscreteField,
    ambient: Ambient,
) -> Result<Monitors> {
    let (witness, node) = convexity_witness(domain, field)?;
    if !(witness > 0.0) {
        return Err(Error::Precondition(format!(
            "field is not strictly locally convex: min eigenvalue {witness:e} at node {node}"
        )));
    }
    let mut m = Monitors {
        u_min: f64::INFINITY,
        u_max: f64::NEG_INFINITY,
        c0: 0.0,
        c1: 0.0,
        kappa_min: f64::INFINITY,
        kappa_max: f64::NEG_INFINITY,
        k0: 0.0,
        min_support: f64::INFINITY,
        boundary_hessian: 0.0,
        convexity_witness: witness,
    };
    for i in 0..domain.len() {
        let u = field.u(domain, i);
        m.u_min = m.u_min.min(u);
        m.u_max = m.u_max.max(u);
    }
    let last_ring = domain.n_r - 2;
    let mut ring_hessians = vec![[nalgebra::Matrix2::zeros(); 2]; domain.n_theta];
    for i in domain.interior() {
        let jet = domain.covariant_jet(&field.values, i)?;
        m.c1 = m.c1.max(jet.gradient.norm());
        let q = frame_for(ambient, &jet.to_scalar_jet()?)?;
        m.kappa_min = m.kappa_min.min(q.min_curvature());
        m.kappa_max = m.kappa_max.max(q.max_curvature());
        m.min_support = m.min_support.min(q.support_function);
        let node = domain.node(i);
        if node.ring + 1 >= last_ring {
            ring_hessians[node.sector][node.ring + 1 - last_ring] =
                jet.convexity - nalgebra::Matrix2::identity() * jet.u;
        }
    }
    // rings sit at (j + ½)Δr, so the boundary is one spacing past the last interior ring
    for [inner, outer] in ring_hessians {
        let h = outer * 2.0 - inner;
        let (a, b) = sym2_eigenvalues(h[(0, 0)], h[(0, 1)], h[(1, 1)]);
        m.boundary_hessian = m.boundary_hessian.max(a.abs().max(b.abs()));
    }
    m.c0 = m.u_max.max(1.0 / (m.u_min - ambient.u_lower()));
    m.k0 = m.kappa_max.max(1.0 / m.kappa_min);
    Ok(m)
}
