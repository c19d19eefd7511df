//! Prescribed Weingarten curvature for radial graphs in space forms.
//!
//! The crate covers the pointwise geometry of radial graphs over domains of
//! the unit sphere, curvature functions built from elementary symmetric
//! polynomials, the curvature operator and its linearization, a polar finite
//! difference discretization on the gnomonic chart, and a homotopy
//! continuation solver for the Dirichlet problem.

pub mod curvature;
pub mod discretization;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod operator;
pub mod solver;
pub mod spaceform;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{FrameQuantities, ScalarJet2};
pub use spaceform::{Ambient, SpaceForm};
