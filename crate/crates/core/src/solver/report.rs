//! Solve reports: one JSON record per accepted t-step, optional failure
//! records, then a summary record.

use std::io::Write;

use serde::Serialize;

use super::monitors::Monitors;
use super::problem::SubsolutionReport;
use crate::error::{Error, Result};

/// One accepted continuation step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub phase: String,
    /// Curvature sign of the background model of this phase.
    pub model: i32,
    pub t: f64,
    pub step: f64,
    pub newton_iterations: usize,
    pub halvings: usize,
    pub residual: f64,
    pub min_convexity: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub grad_max: f64,
    /// min over interior nodes of v − v̲.
    pub comparison_margin: f64,
    pub comparison_ok: bool,
    /// min over interior nodes of the strict-subsolution margin (spherical path).
    pub subsolution_margin: Option<f64>,
}

/// A continuation that stopped before t = 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub phase: String,
    /// Parameter value of the last rejected step.
    pub t: f64,
    /// Last accepted parameter value.
    pub last_t: f64,
    pub step: f64,
    pub reason: String,
}

/// Path parameters actually used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Parameters {
    pub epsilon: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub t_exponent: Option<u32>,
    /// ε of the Euclidean auxiliary phase of the spherical pipeline.
    pub auxiliary_epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub model: i32,
    pub parameters: Parameters,
    pub steps: Vec<StepRecord>,
    pub failure: Option<FailureRecord>,
    pub success: bool,
    pub final_residual: f64,
    pub monitors: Option<Monitors>,
    pub subsolution: SubsolutionReport,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line<'a> {
    Step(&'a StepRecord),
    Failure(&'a FailureRecord),
    Summary {
        model: i32,
        success: bool,
        final_residual: f64,
        accepted_steps: usize,
        comparison_ok: bool,
        parameters: &'a Parameters,
        monitors: &'a Option<Monitors>,
        subsolution: &'a SubsolutionReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        extra: Option<&'a serde_json::Value>,
    },
}

impl SolveReport {
    /// True when every accepted step satisfied the comparison with the subsolution.
    pub fn comparison_ok(&self) -> bool {
        self.steps.iter().all(|s| s.comparison_ok)
    }

    pub fn kappa_range(&self) -> Option<(f64, f64)> {
        self.steps.last().map(|s| (s.kappa_min, s.kappa_max))
    }

    /// Writes the records as JSON lines. `extra` is attached to the summary
    /// (e.g. errors against a known solution).
    pub fn write_jsonl<W: Write>(&self, mut w: W, extra: Option<&serde_json::Value>) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidInput(format!("report write failed: {e}"));
        let mut put = |line: &Line| -> Result<()> {
            let s = serde_json::to_string(line).map_err(|e| Error::InvalidInput(e.to_string()))?;
            writeln!(w, "{s}").map_err(io)
        };
        for s in &self.steps {
            put(&Line::Step(s))?;
        }
        if let Some(f) = &self.failure {
            put(&Line::Failure(f))?;
        }
        put(&Line::Summary {
            model: self.model,
            success: self.success,
            final_residual: self.final_residual,
            accepted_steps: self.steps.len(),
            comparison_ok: self.comparison_ok(),
            parameters: &self.parameters,
            monitors: &self.monitors,
            subsolution: &self.subsolution,
            extra,
        })
    }
}
