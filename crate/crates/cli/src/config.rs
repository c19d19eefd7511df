//! Problem configuration files (TOML).
//!
//! ```toml
//! [problem]
//! model = 0                   # curvature sign K: 0, 1 or -1
//! curvature = "sigma(2)^(1/2)"
//! psi = "1"                   # expression in y1, y2, z1, z2, z3, u
//!
//! [domain]
//! center = [0.0, 0.0, 1.0]
//! geodesic_radius = 0.6283185307179586
//! n_r = 17
//! n_theta = 32
//!
//! [data]
//! boundary = "1"              # u on the boundary, expression in y1, y2, z1, z2, z3
//! subsolution = "1"           # defaults to the boundary expression
//! exact = "1"                 # optional, reported as sup |u - exact|
//!
//! [homotopy]                  # all optional
//! path = "auto"               # auto | 68 | 69 | 71
//!
//! [output]                    # all optional, relative to the config file
//! report = "run.report.jsonl"
//! mesh = "run.obj"
//! field = "run.field.csv"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use weingarten::curvature::CurvatureFunction;
use weingarten::discretization::{AnalyticField, DiscreteField, DomainSpec, PolarDomain};
use weingarten::expr::{Expression, Var};
use weingarten::solver::{ExpressionPsi, PipelineSettings, Subsolution};
use weingarten::SpaceForm;

pub const PSI_VARS: [Var; 6] = [Var::Y1, Var::Y2, Var::Z1, Var::Z2, Var::Z3, Var::U];
pub const FIELD_VARS: [Var; 5] = [Var::Y1, Var::Y2, Var::Z1, Var::Z2, Var::Z3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub problem: ProblemSection,
    pub domain: DomainSpec,
    pub data: DataSection,
    #[serde(default)]
    pub homotopy: PipelineSettings,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub model: i32,
    pub curvature: String,
    pub psi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub boundary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsolution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("malformed configuration")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Everything the solver needs, built and range-checked from a configuration.
pub struct LoadedProblem {
    pub model: SpaceForm,
    pub spec: CurvatureFunction,
    pub psi: ExpressionPsi,
    pub domain: PolarDomain,
    pub boundary: DiscreteField,
    pub subsolution: Subsolution,
    pub exact: Option<DiscreteField>,
}

fn field_expression(text: &str, what: &str) -> Result<Expression> {
    Expression::parse(text, &FIELD_VARS).with_context(|| format!("{what} expression '{text}'"))
}

pub fn load_problem(cfg: &ProblemConfig) -> Result<LoadedProblem> {
    let model = SpaceForm::new(cfg.problem.model).context("problem.model")?;
    let spec = CurvatureFunction::parse(&cfg.problem.curvature, 2)
        .with_context(|| format!("curvature function '{}'", cfg.problem.curvature))?;
    let psi = ExpressionPsi::new(
        Expression::parse(&cfg.problem.psi, &PSI_VARS)
            .with_context(|| format!("psi expression '{}'", cfg.problem.psi))?,
    );
    let domain = cfg.domain.build().context("domain")?;

    let analytic = |text: &str, what: &str| -> Result<AnalyticField> {
        Ok(AnalyticField::gnomonic(&field_expression(text, what)?, &domain.chart)?)
    };
    let boundary_f = analytic(&cfg.data.boundary, "boundary")?;
    let boundary = DiscreteField::from_u(&domain, |n| boundary_f.u(n.y));
    let sub_text = cfg.data.subsolution.as_deref().unwrap_or(&cfg.data.boundary);
    let sub_f = analytic(sub_text, "subsolution")?;
    let subsolution = Subsolution {
        field: DiscreteField::from_u(&domain, |n| sub_f.u(n.y)),
        exact_jets: Some(domain.nodes().iter().map(|n| sub_f.frame_jet(n.y)).collect()),
    };
    for i in domain.boundary() {
        let u = boundary.u(&domain, i);
        model
            .check_u(u)
            .with_context(|| format!("boundary datum at boundary node {i}"))?;
    }
    for i in 0..domain.len() {
        let u = subsolution.field.u(&domain, i);
        if !u.is_finite() {
            bail!("subsolution is not finite at node {i}");
        }
        model.check_u(u).with_context(|| format!("subsolution at node {i}"))?;
    }
    let exact = match &cfg.data.exact {
        Some(text) => {
            let f = analytic(text, "exact")?;
            Some(DiscreteField::from_u(&domain, |n| f.u(n.y)))
        }
        None => None,
    };
    Ok(LoadedProblem { model, spec, psi, domain, boundary, subsolution, exact })
}

/// Resolves an output path relative to the directory of the config file.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[problem]
model = 1
curvature = "sigma(2)^(1/2)"
psi = "1.3763819204711736"

[domain]
center = [0.0, 0.0, 1.0]
geodesic_radius = 0.6283185307179586
n_r = 9
n_theta = 16

[data]
boundary = "1.3763819204711736"

[homotopy]
path = "71"
epsilon = 0.3

[homotopy.newton]
tolerance = 1e-11
"#;

    #[test]
    fn text_round_trip() {
        let cfg = ProblemConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.homotopy.path, weingarten::solver::PathSelection::Spherical);
        assert_eq!(cfg.homotopy.newton.tolerance, 1e-11);
        assert_eq!(cfg.homotopy.newton.max_iterations, 50);
        let text = cfg.to_text().unwrap();
        let again = ProblemConfig::parse(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_text().unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("n_theta = 16", "n_theta = 16\nn_phi = 3");
        assert!(ProblemConfig::parse(&bad).is_err());
    }

    #[test]
    fn loads_and_checks_ranges() {
        let cfg = ProblemConfig::parse(SAMPLE).unwrap();
        let p = load_problem(&cfg).unwrap();
        assert_eq!(p.domain.n_r, 9);
        let mut bad = cfg.clone();
        bad.problem.model = -1;
        bad.data.boundary = "0.5".into();
        let Err(err) = load_problem(&bad) else { panic!("out-of-range boundary accepted") };
        assert!(format!("{err:#}").contains("boundary"), "{err:#}");
    }
}
