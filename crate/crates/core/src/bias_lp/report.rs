//! Solving assembled programs and packaging the result.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bias_lp::assemble::{AssembledLp, BoundKind, Side};
use crate::bias_lp::quadform::QuadPoly;
use crate::error::Result;
use crate::lp::{LinExpr, LpSolver, LpStatus, CERTIFICATE_TOL};
use crate::model::geometry::Step;
use crate::model::piecewise::{Degree, Piece, PiecewiseFn};
use crate::model::walk::RandomWalkModel;

/// Bias envelope for one step; `None` on components where the step is not admissible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub step: Step,
    pub pieces: Vec<Option<Piece>>,
}

impl Envelope {
    pub fn value(&self, model: &RandomWalkModel, n: &[i64]) -> Option<f64> {
        self.pieces[model.component_of(n)].as_ref().map(|p| p.value(n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub fbar: PiecewiseFn,
    pub g: PiecewiseFn,
    /// Lower envelopes: `D_u >= -A_u`.
    pub a: Vec<Envelope>,
    /// Upper envelopes: `D_u <= B_u`.
    pub b: Vec<Envelope>,
}

impl Certificate {
    pub fn envelope_a(&self, u: &Step) -> Option<&Envelope> {
        self.a.iter().find(|e| &e.step == u)
    }

    pub fn envelope_b(&self, u: &Step) -> Option<&Envelope> {
        self.b.iter().find(|e| &e.step == u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub variables: usize,
    pub constraints: usize,
    pub iterations: usize,
    pub max_violation: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub side: Side,
    pub degree: u32,
    pub status: LpStatus,
    pub bound: Option<f64>,
    pub certificate: Option<Certificate>,
    pub diagnostics: Diagnostics,
}

impl BoundReport {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn piece(p: &QuadPoly<LinExpr>, values: &[f64]) -> Piece {
    Piece {
        constant: p.constant.eval(values),
        linear: p.linear.iter().map(|e| e.eval(values)).collect(),
        quadratic: p.quadratic.iter().map(|e| e.eval(values)).collect(),
    }
}

fn envelopes(
    blocks: &std::collections::BTreeMap<(Step, usize), QuadPoly<LinExpr>>,
    ncomp: usize,
    values: &[f64],
) -> Vec<Envelope> {
    let mut out: Vec<Envelope> = Vec::new();
    for ((u, k), p) in blocks {
        if out.last().is_none_or(|e| &e.step != u) {
            out.push(Envelope {
                step: u.clone(),
                pieces: vec![None; ncomp],
            });
        }
        out.last_mut().expect("pushed").pieces[*k] = Some(piece(p, values));
    }
    out
}

/// Solves `lp` and re-checks the optimal point against every row. A point
/// violating a row by more than the certificate tolerance is reported as a
/// numerical error rather than a bound.
pub fn solve_lp(lp: &AssembledLp, solver: &dyn LpSolver) -> Result<BoundReport> {
    let start = Instant::now();
    let ncomp = lp.fbar.len();
    let mut report = BoundReport {
        kind: lp.kind,
        side: lp.side,
        degree: lp.degree.as_int(),
        status: LpStatus::Infeasible,
        bound: None,
        certificate: None,
        diagnostics: Diagnostics {
            variables: lp.spec.num_variables(),
            constraints: lp.spec.num_constraints(),
            iterations: 0,
            max_violation: 0.0,
            seconds: 0.0,
        },
    };
    if lp.trivially_infeasible {
        return Ok(report);
    }
    let sol = solver.solve(&lp.spec)?;
    report.status = sol.status;
    report.diagnostics.iterations = sol.iterations;
    if sol.status == LpStatus::Optimal {
        let values = &sol.values;
        let violation = lp.spec.max_violation(values);
        report.diagnostics.max_violation = violation;
        if violation > CERTIFICATE_TOL {
            return Err(crate::Error::Numerical(format!(
                "certificate violates a constraint by {violation:e}"
            )));
        }
        let fn_of = |blocks: &[QuadPoly<LinExpr>], degree| {
            PiecewiseFn::new(degree, blocks.iter().map(|p| piece(p, values)).collect())
        };
        report.bound = Some(lp.spec.objective_value(values));
        report.certificate = Some(Certificate {
            fbar: fn_of(&lp.fbar, Degree::Quadratic)?,
            g: fn_of(&lp.g, lp.degree)?,
            a: envelopes(&lp.a, ncomp, values),
            b: envelopes(&lp.b, ncomp, values),
        });
    }
    report.diagnostics.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
