//! Certified bounds on stationary performance measures of random walks in
//! the non-negative orthant.
//!
//! The bounds compare the walk with a perturbed walk whose stationary law is
//! known in product form and control the error through bounds on bias terms.
//! Two families of bias bounds are available: explicit geometric bounds from
//! a drift condition ([`ergodicity`]) and component-wise polynomial bounds
//! found by linear programming ([`bias_lp`]). The [`oracle`] module computes
//! ground truth on truncated state spaces.

pub mod bias_lp;
pub mod error;
pub mod ergodicity;
pub mod experiment;
pub mod families;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod refinement;

pub use error::{Error, Result};
