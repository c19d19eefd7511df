//! Polar finite differences on the gnomonic chart of a geodesic disk.

pub mod analytic;
pub mod assembly;
pub mod chart;
pub mod export;
pub mod grid;

pub use analytic::AnalyticField;
pub use assembly::{convexity_witness, DiscreteOperator, RightHandSide, SparseMatrix};
pub use chart::{ChartDerivatives, FrameJet, GnomonicChart};
pub use export::{DomainSpec, FieldRow, FieldTable};
pub use grid::{DiscreteField, GridNode, PolarDomain};
