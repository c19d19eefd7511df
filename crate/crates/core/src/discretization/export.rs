//! Field tables (delimited text) and triangle meshes of discrete solutions.
//!
//! A field table starts with `# key=value` metadata lines that describe the
//! grid, followed by a CSV header and one row per node. Reading a table back
//! and rebuilding the domain from its metadata reproduces the field exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::grid::{DiscreteField, PolarDomain};
use crate::error::{Error, Result};
use crate::geometry::frame_from_u;
use crate::spaceform::SpaceForm;

/// Grid parameters needed to rebuild a [`PolarDomain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub center: [f64; 3],
    pub geodesic_radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl DomainSpec {
    pub fn of(domain: &PolarDomain) -> Self {
        let c = domain.chart.center;
        Self {
            center: [c.x, c.y, c.z],
            geodesic_radius: domain.geodesic_radius,
            n_r: domain.n_r,
            n_theta: domain.n_theta,
        }
    }

    pub fn build(&self) -> Result<PolarDomain> {
        PolarDomain::build(
            Vector3::from(self.center),
            self.geodesic_radius,
            self.n_r,
            self.n_theta,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub ring: usize,
    pub sector: usize,
    pub y1: f64,
    pub y2: f64,
    pub u_tilde: f64,
    pub u: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<FieldRow>,
}

/// Principal curvatures at every interior node; NaN on the boundary or
/// where the jet leaves the model's admissible range.
pub fn node_curvatures(
    domain: &PolarDomain,
    field: &DiscreteField,
    model: SpaceForm,
) -> Vec<[f64; 2]> {
    (0..domain.len())
        .map(|i| {
            let k = domain
                .covariant_jet(&field.values, i)
                .and_then(|j| j.to_scalar_jet())
                .and_then(|j| frame_from_u(model, &j));
            match k {
                Ok(q) => [q.principal_curvatures[0], q.principal_curvatures[1]],
                Err(_) => [f64::NAN; 2],
            }
        })
        .collect()
}

impl FieldTable {
    pub fn new(domain: &PolarDomain, field: &DiscreteField, model: SpaceForm) -> Self {
        let kappa = node_curvatures(domain, field, model);
        let rows = domain
            .nodes()
            .iter()
            .zip(&field.values)
            .zip(kappa)
            .map(|((n, &ut), k)| FieldRow {
                ring: n.ring,
                sector: n.sector,
                y1: n.y.x,
                y2: n.y.y,
                u_tilde: ut,
                u: ut / n.mu,
                kappa1: k[0],
                kappa2: k[1],
            })
            .collect();
        let spec = DomainSpec::of(domain);
        let mut metadata = BTreeMap::new();
        metadata.insert("model".into(), model.curvature_sign().to_string());
        metadata.insert(
            "center".into(),
            format!("{},{},{}", spec.center[0], spec.center[1], spec.center[2]),
        );
        metadata.insert("geodesic_radius".into(), spec.geodesic_radius.to_string());
        metadata.insert("n_r".into(), spec.n_r.to_string());
        metadata.insert("n_theta".into(), spec.n_theta.to_string());
        Self { metadata, rows }
    }

    fn meta<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .metadata
            .get(key)
            .ok_or_else(|| Error::Parse(format!("field table lacks metadata '{key}'")))?;
        raw.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad metadata value {key}={raw}")))
    }

    pub fn model(&self) -> Result<SpaceForm> {
        SpaceForm::new(self.meta("model")?)
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let c: Vec<f64> = self
            .metadata
            .get("center")
            .ok_or_else(|| Error::Parse("field table lacks metadata 'center'".into()))?
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad center: {e}")))?;
        let center: [f64; 3] = c
            .try_into()
            .map_err(|_| Error::Parse("center needs three components".into()))?;
        Ok(DomainSpec {
            center,
            geodesic_radius: self.meta("geodesic_radius")?,
            n_r: self.meta("n_r")?,
            n_theta: self.meta("n_theta")?,
        })
    }

    /// Rebuilds the domain from the metadata and checks the rows against it.
    pub fn to_field(&self) -> Result<(PolarDomain, DiscreteField)> {
        let domain = self.domain_spec()?.build()?;
        if self.rows.len() != domain.len() {
            return Err(Error::Parse(format!(
                "field table has {} rows, grid has {} nodes",
                self.rows.len(),
                domain.len()
            )));
        }
        let mut values = vec![f64::NAN; domain.len()];
        let mut seen = vec![false; domain.len()];
        for row in &self.rows {
            if row.ring >= domain.n_r || row.sector >= domain.n_theta {
                return Err(Error::Parse(format!(
                    "row ({}, {}) outside the grid",
                    row.ring, row.sector
                )));
            }
            let i = domain.index(row.ring, row.sector);
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Parse(format!("duplicate row ({}, {})", row.ring, row.sector)));
            }
            if !row.u_tilde.is_finite() {
                return Err(Error::Parse(format!("non-finite u_tilde at ({}, {})", row.ring, row.sector)));
            }
            values[i] = row.u_tilde;
        }
        Ok((domain, DiscreteField::from_tilde(values)))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidInput(format!("write failed: {e}"));
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}").map_err(io)?;
        }
        let mut csv = csv::Writer::from_writer(w);
        for row in &self.rows {
            csv.serialize(row)
                .map_err(|e| Error::InvalidInput(format!("write failed: {e}")))?;
        }
        csv.flush().map_err(io)
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut body = String::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Parse(format!("read failed: {e}")))?;
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<FieldRow>, _>>()
            .map_err(|e| Error::Parse(format!("malformed field table: {e}")))?;
        Ok(Self { metadata, rows })
    }
}

/// Position of the graph point over z at height ρ, in a 3-dimensional
/// picture of the model: ρz for K = 0, tan(ρ)z (central projection of the
/// hemisphere) for K = 1 and tanh(ρ)z (Klein ball) for K = −1.
pub fn embed(model: SpaceForm, z: Vector3<f64>, rho: f64) -> Vector3<f64> {
    let s = match model.curvature_sign() {
        0 => rho,
        1 => rho.tan(),
        _ => rho.tanh(),
    };
    z * s
}

/// Writes the graph as a Wavefront OBJ triangle mesh. The pole is closed by
/// a fan over the first ring; neighbouring rings are joined by two triangles
/// per cell.
pub fn write_obj_mesh<W: Write>(
    mut w: W,
    domain: &PolarDomain,
    field: &DiscreteField,
    model: SpaceForm,
) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("write failed: {e}"));
    let embedding = match model.curvature_sign() {
        0 => "euclidean position rho*z",
        1 => "central projection of the hemisphere, tan(rho)*z",
        _ => "Klein ball model, tanh(rho)*z",
    };
    writeln!(w, "# radial graph over a geodesic disk, K = {}", model.curvature_sign()).map_err(io)?;
    writeln!(w, "# embedding: {embedding}").map_err(io)?;
    writeln!(w, "# vertices follow the field table order (ring-major); rho = zeta(u)").map_err(io)?;
    for (i, n) in domain.nodes().iter().enumerate() {
        let rho = model.zeta(field.u(domain, i))?.value;
        let p = embed(model, n.z, rho);
        writeln!(w, "v {} {} {}", p.x, p.y, p.z).map_err(io)?;
    }
    let nt = domain.n_theta;
    // OBJ indices are 1-based.
    let v = |ring: usize, sector: usize| domain.index(ring, sector) + 1;
    for k in 1..nt - 1 {
        writeln!(w, "f {} {} {}", v(0, 0), v(0, k), v(0, k + 1)).map_err(io)?;
    }
    for j in 0..domain.n_r - 1 {
        for k in 0..nt {
            let k1 = (k + 1) % nt;
            writeln!(w, "f {} {} {}", v(j, k), v(j + 1, k), v(j + 1, k1)).map_err(io)?;
            writeln!(w, "f {} {} {}", v(j, k), v(j + 1, k1), v(j, k1)).map_err(io)?;
        }
    }
    Ok(())
}
