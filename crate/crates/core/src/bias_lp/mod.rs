//! Certified bounds from component-wise polynomial bias envelopes.
//!
//! [`BiasContext`] prepares the refinement and flow decompositions for an
//! instance; [`BiasContext::assemble`] and [`BiasContext::assemble_comparison`]
//! build programs that [`solve_lp`] turns into [`BoundReport`]s.

pub mod assemble;
pub mod phi;
pub mod quadform;
pub mod report;

pub use assemble::{AssembledLp, BiasContext, BiasLpOptions, BoundKind, Side, StepSelection};
pub use phi::{build_phi_table, solve_phi, verify_phi, PhiArc, PhiEntry, PhiTable};
pub use quadform::QuadPoly;
pub use report::{solve_lp, BoundReport, Certificate, Diagnostics, Envelope};

use crate::error::Result;
use crate::families::Instance;
use crate::lp::DenseSimplex;
use crate::model::piecewise::Degree;

/// Upper or lower bound from the bias program with the built-in solver.
pub fn bias_bound(instance: &Instance, side: Side, degree: Degree, options: BiasLpOptions) -> Result<BoundReport> {
    let ctx = BiasContext::new(instance, options)?;
    solve_lp(&ctx.assemble(side, degree)?, &DenseSimplex::default())
}

/// One-sided comparison certificate. The unperturbed reward is tried first;
/// if no envelopes support it, the perturbed reward is searched as well.
pub fn comparison_bound(ctx: &BiasContext<'_>, side: Side, degree: Degree) -> Result<BoundReport> {
    let solver = DenseSimplex::default();
    let fixed = solve_lp(&ctx.assemble_comparison(side, degree, true)?, &solver)?;
    if fixed.is_optimal() {
        return Ok(fixed);
    }
    solve_lp(&ctx.assemble_comparison(side, degree, false)?, &solver)
}
