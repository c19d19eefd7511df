//! Boundary-fitted polar lattice on the gnomonic image of a geodesic disk.
//!
//! Radial nodes sit at r_j = (j + ½)Δr with the last ring on the boundary,
//! so there is no node at the pole. Radial differences near the pole reach
//! across it: the point (−r, θ) is the node (r, θ + π). Terms carrying a
//! 1/r factor use fourth-order differences, so the loss of one power of h
//! at the innermost rings still leaves a second-order jet.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2, Vector3};

use super::chart::{self, ChartDerivatives, FrameJet, GnomonicChart};
use crate::error::{Error, Result};

pub const MIN_RADIAL_NODES: usize = 3;
pub const MIN_ANGULAR_NODES: usize = 8;

/// Weights of one stencil point for (∂x, ∂y, ∂xx, ∂xy, ∂yy).
pub type StencilWeights = [f64; 5];

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub ring: usize,
    pub sector: usize,
    pub r: f64,
    pub theta: f64,
    pub y: Vector2<f64>,
    pub z: Vector3<f64>,
    pub mu: f64,
    pub boundary: bool,
    /// Empty on boundary nodes.
    pub stencil: Vec<(usize, StencilWeights)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarDomain {
    pub chart: GnomonicChart,
    pub geodesic_radius: f64,
    pub chart_radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub dr: f64,
    pub dtheta: f64,
    nodes: Vec<GridNode>,
}

impl PolarDomain {
    /// Lattice over the geodesic disk of the given radius around `center`.
    pub fn build(
        center: Vector3<f64>,
        geodesic_radius: f64,
        n_r: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if !(geodesic_radius < FRAC_PI_2) {
            return Err(Error::HemisphereViolation(geodesic_radius));
        }
        if !(geodesic_radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "geodesic radius must be positive, got {geodesic_radius}"
            )));
        }
        if n_r < MIN_RADIAL_NODES {
            return Err(Error::InvalidInput(format!("n_r must be >= {MIN_RADIAL_NODES}, got {n_r}")));
        }
        if n_theta < MIN_ANGULAR_NODES || !n_theta.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "n_theta must be even and >= {MIN_ANGULAR_NODES}, got {n_theta}"
            )));
        }
        let chart = GnomonicChart::new(center)?;
        let chart_radius = geodesic_radius.tan();
        let dr = chart_radius / (n_r as f64 - 0.5);
        let dtheta = 2.0 * PI / n_theta as f64;

        let mut nodes = Vec::with_capacity(n_r * n_theta);
        for j in 0..n_r {
            for k in 0..n_theta {
                let r = if j + 1 == n_r { chart_radius } else { (j as f64 + 0.5) * dr };
                let theta = k as f64 * dtheta;
                let y = Vector2::new(r * theta.cos(), r * theta.sin());
                nodes.push(GridNode {
                    ring: j,
                    sector: k,
                    r,
                    theta,
                    y,
                    z: chart.point(y),
                    mu: chart::mu(y),
                    boundary: j + 1 == n_r,
                    stencil: Vec::new(),
                });
            }
        }
        let mut domain = Self {
            chart,
            geodesic_radius,
            chart_radius,
            n_r,
            n_theta,
            dr,
            dtheta,
            nodes,
        };
        for idx in 0..domain.nodes.len() {
            if !domain.nodes[idx].boundary {
                let mut s = domain.stencil_for(idx);
                balance_center(&mut s, idx);
                domain.nodes[idx].stencil = s;
            }
        }
        Ok(domain)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &GridNode {
        &self.nodes[idx]
    }

    pub fn index(&self, ring: usize, sector: usize) -> usize {
        ring * self.n_theta + sector % self.n_theta
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].boundary)
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].boundary)
    }

    /// Node index of polar offset (dj, dk) from (j, k), reflecting through the pole.
    fn neighbor(&self, j: usize, k: usize, dj: i64, dk: i64) -> usize {
        let n = self.n_theta as i64;
        let jj = j as i64 + dj;
        let kk = k as i64 + dk;
        if jj < 0 {
            self.index((-jj - 1) as usize, (kk + n / 2).rem_euclid(n) as usize)
        } else {
            self.index(jj as usize, kk.rem_euclid(n) as usize)
        }
    }

    fn stencil_for(&self, idx: usize) -> Vec<(usize, StencilWeights)> {
        let node = &self.nodes[idx];
        let (j, k) = (node.ring, node.sector);
        let (dr, dt, r) = (self.dr, self.dtheta, node.r);
        let (s, c) = node.theta.sin_cos();

        // Polar operator weights on the block dj ∈ {−3..2}, dk ∈ {−2..2},
        // indexed [dj+3][dk+2]. θ-differences and the radial differences that
        // get divided by r are fourth order (one-sided next to the boundary);
        // ∂rr is second order.
        const FIRST4: [f64; 6] = [0.0, 1.0, -8.0, 0.0, 8.0, -1.0];
        const FIRST4_OUTER: [f64; 6] = [-1.0, 6.0, -18.0, 10.0, 3.0, 0.0];
        let radial_first = if j + 2 < self.n_r { FIRST4 } else { FIRST4_OUTER }.map(|w| w / (12.0 * dr));
        let theta_first = [1.0, -8.0, 0.0, 8.0, -1.0].map(|w| w / (12.0 * dt));
        let theta_second = [-1.0, 16.0, -30.0, 16.0, -1.0].map(|w| w / (12.0 * dt * dt));
        let mut d_r = [[0.0; 5]; 6];
        let mut d_rr = [[0.0; 5]; 6];
        let mut d_t = [[0.0; 5]; 6];
        let mut d_tt = [[0.0; 5]; 6];
        let mut d_rt = [[0.0; 5]; 6];
        d_rr[4][2] = 1.0 / (dr * dr);
        d_rr[3][2] = -2.0 / (dr * dr);
        d_rr[2][2] = 1.0 / (dr * dr);
        d_t[3].copy_from_slice(&theta_first);
        d_tt[3].copy_from_slice(&theta_second);
        for a in 0..6 {
            d_r[a][2] = radial_first[a];
            for b in 0..5 {
                d_rt[a][b] = radial_first[a] * theta_first[b];
            }
        }

        let (c2, s2, sc, r2) = (c * c, s * s, s * c, r * r);
        let mut out: Vec<(usize, StencilWeights)> = Vec::with_capacity(30);
        for a in 0..6 {
            for b in 0..5 {
                let (ur, urr, ut, utt, urt) = (d_r[a][b], d_rr[a][b], d_t[a][b], d_tt[a][b], d_rt[a][b]);
                if ur == 0.0 && urr == 0.0 && ut == 0.0 && utt == 0.0 && urt == 0.0 {
                    continue;
                }
                let w = [
                    c * ur - s / r * ut,
                    s * ur + c / r * ut,
                    c2 * urr - 2.0 * sc / r * urt + s2 / r2 * utt + s2 / r * ur + 2.0 * sc / r2 * ut,
                    sc * urr + (c2 - s2) / r * urt - sc / r2 * utt - sc / r * ur - (c2 - s2) / r2 * ut,
                    s2 * urr + 2.0 * sc / r * urt + c2 / r2 * utt + c2 / r * ur - 2.0 * sc / r2 * ut,
                ];
                merge(&mut out, self.neighbor(j, k, a as i64 - 3, b as i64 - 2), w);
            }
        }
        out
    }

    /// Chart derivatives of ũ at an interior node.
    pub fn chart_derivatives(&self, values: &[f64], idx: usize) -> Result<ChartDerivatives> {
        let node = &self.nodes[idx];
        if node.boundary {
            return Err(Error::BoundaryStencil(idx));
        }
        // Differences against the center are exact for neighbouring values,
        // which keeps roundoff from being amplified by the large weights of
        // the innermost rings.
        let center = values[idx];
        let mut d = [0.0; 5];
        for (col, w) in &node.stencil {
            let delta = values[*col] - center;
            for m in 0..5 {
                d[m] += w[m] * delta;
            }
        }
        Ok(ChartDerivatives {
            value: values[idx],
            gradient: Vector2::new(d[0], d[1]),
            hessian: Matrix2::new(d[2], d[3], d[3], d[4]),
        })
    }

    /// Orthonormal-frame jet of u at an interior node.
    pub fn covariant_jet(&self, values: &[f64], idx: usize) -> Result<FrameJet> {
        let d = self.chart_derivatives(values, idx)?;
        Ok(chart::gnomonic_frame_jet(self.nodes[idx].y, &d))
    }
}

/// Sets the center weight to minus the sum of the others, matching the
/// difference form used when applying the stencil.
fn balance_center(stencil: &mut Vec<(usize, StencilWeights)>, idx: usize) {
    let mut others = [0.0; 5];
    for (col, w) in stencil.iter() {
        if *col != idx {
            others.iter_mut().zip(w).for_each(|(a, b)| *a += b);
        }
    }
    match stencil.iter_mut().find(|(c, _)| *c == idx) {
        Some((_, w)) => *w = others.map(|x| -x),
        None => stencil.push((idx, others.map(|x| -x))),
    }
}

fn merge(out: &mut Vec<(usize, StencilWeights)>, col: usize, w: StencilWeights) {
    match out.iter_mut().find(|(c, _)| *c == col) {
        Some((_, acc)) => acc.iter_mut().zip(w).for_each(|(x, y)| *x += y),
        None => out.push((col, w)),
    }
}

/// Values ũ = μu on every node of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn from_tilde(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Samples u at every node and stores ũ = μu.
    pub fn from_u(domain: &PolarDomain, mut u: impl FnMut(&GridNode) -> f64) -> Self {
        Self {
            values: domain.nodes().iter().map(|n| n.mu * u(n)).collect(),
        }
    }

    pub fn u(&self, domain: &PolarDomain, idx: usize) -> f64 {
        self.values[idx] / domain.node(idx).mu
    }

    pub fn u_values(&self, domain: &PolarDomain) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.u(domain, i)).collect()
    }

    /// Copies the boundary values of `other` into this field.
    pub fn impose_boundary(&mut self, domain: &PolarDomain, other: &DiscreteField) {
        for i in domain.boundary() {
            self.values[i] = other.values[i];
        }
    }
}
