//! Lipschitz invariants of gasket-type self-similar sets.
//!
//! The crate computes the Hausdorff dimension, the exact energy
//! renormalization factor and the walk dimension of finitely ramified
//! rotation-free IFS attractors, and cross-checks the walk dimension against
//! exit-time scaling, heat-kernel decay and the Besov critical exponent.

pub mod audit;
pub mod besov;
pub mod config;
pub mod dirichlet;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod graph;
pub mod ifs;
pub mod linalg;
pub mod rational;
pub mod resistance;

pub use error::{Error, Result};
pub use geometry::Point;
pub use ifs::{IfsSpec, MeasureSample, Similitude, ValidationReport};
pub use rational::{LogRatio, Rational};
