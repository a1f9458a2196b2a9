//! Random walks on the non-negative orthant and the functions defined on them.

pub mod config;
pub mod ctmc;
pub mod geometry;
pub mod piecewise;
pub mod product_form;
pub mod walk;

pub use ctmc::{CtmcComponent, CtmcSpec};
pub use geometry::{BoxRegion, State, Step, UpperBound};
pub use piecewise::{Degree, Piece, PiecewiseFn};
pub use product_form::{GeometricTerm, Moments, ProductFormDistribution};
pub use walk::{Component, DriftReport, RandomWalkModel, PROB_TOL};
