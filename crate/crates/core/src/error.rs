use thiserror::Error;

/// Errors raised by the geometry kernels, operators, discretization and solver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the admissible range of a scalar transform or model.
    #[error("domain error: {quantity} = {value} violates {bound}")]
    Domain {
        quantity: &'static str,
        value: f64,
        bound: String,
    },

    /// Eigenvalues (or a convexity matrix) left the positive cone.
    #[error("cone violation: {0}")]
    ConeViolation(String),

    /// Malformed input (dimension mismatch, asymmetric hessian, non-finite data).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested quantity is not defined for this space form.
    #[error("unsupported for curvature sign {curvature_sign}: {what}")]
    Unsupported {
        curvature_sign: i32,
        what: &'static str,
    },

    /// A pointwise identity the caller promised does not hold.
    #[error("stale input: residual {residual:e} exceeds {tolerance:e}")]
    StaleInput { residual: f64, tolerance: f64 },

    /// The domain would contain a closed hemisphere.
    #[error("hemisphere violation: geodesic radius {0} must be below pi/2")]
    HemisphereViolation(f64),

    /// A finite-difference stencil was requested at a node without one.
    #[error("boundary stencil: node {0} has no interior stencil")]
    BoundaryStencil(usize),

    /// A convexity witness failed at a grid node.
    #[error("convexity lost at node {node}: min eigenvalue {min_eigenvalue:e}")]
    NotConvex { node: usize, min_eigenvalue: f64 },

    /// A precondition of a solver operation failed.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Expression or configuration text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Newton iteration stopped without reaching the residual tolerance.
    /// Carries the last accepted iterate (ũ values).
    #[error("newton did not converge: {reason} (residual {residual:e})")]
    NonConvergence {
        reason: String,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// The sparse linear solve failed.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, bound: impl Into<String>) -> Self {
        Error::Domain {
            quantity,
            value,
            bound: bound.into(),
        }
    }

    /// True for errors that signal loss of strict local convexity.
    pub fn is_cone_violation(&self) -> bool {
        matches!(self, Error::ConeViolation(_) | Error::NotConvex { .. })
    }
}
