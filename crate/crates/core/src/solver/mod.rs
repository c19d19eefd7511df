//! Damped Newton solves and continuation paths for the Dirichlet problem.

pub mod homotopy;
pub mod monitors;
pub mod newton;
pub mod problem;
pub mod report;

pub use homotopy::{
    continuation_run, path_residual, solve, validate_config, ContinuationOutcome, HomotopyConfig,
    PathKind, PathProblem, PathSelection, PipelineSettings, Problem, SolveOutcome,
};
pub use monitors::{estimate_monitors, Monitors};
pub use newton::{newton_solve, NewtonOptions, NewtonRecord};
pub use problem::{verify_subsolution, ExpressionPsi, Psi, Subsolution, SubsolutionReport};
pub use report::{FailureRecord, Parameters, SolveReport, StepRecord};
