//! Solver-agnostic linear programs and the built-in simplex solver.

pub mod mps;
pub mod simplex;

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use simplex::DenseSimplex;

/// Largest tolerated violation of a constraint by a reported solution.
pub const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// Affine expression `constant + sum_k coef_k x_k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<VarId, f64>,
    constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coef);
        e
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(v).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.terms.remove(&v);
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, factor: f64) {
        if factor == 0.0 {
            return;
        }
        for (&v, &c) in &other.terms {
            self.add_term(v, c * factor);
        }
        self.constant += other.constant * factor;
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut e = Self::zero();
        e.add_scaled(self, factor);
        e
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    /// `false` for a free variable, `true` for `x >= 0`.
    pub nonnegative: bool,
}

/// `sum coeffs . x  (sense)  rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violates the constraint (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.lhs(values);
        match self.sense {
            ConstraintSense::Le => (lhs - self.rhs).max(0.0),
            ConstraintSense::Ge => (self.rhs - lhs).max(0.0),
            ConstraintSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgramSpec {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub direction: Direction,
}

impl LinearProgramSpec {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            direction,
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, nonnegative: bool) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            nonnegative,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Adds `expr (sense) 0`. Constant expressions are checked immediately and
    /// not stored; the return value is `false` when such a row is violated.
    pub fn add_constraint(&mut self, name: impl Into<String>, expr: &LinExpr, sense: ConstraintSense) -> bool {
        if expr.is_constant() {
            let c = expr.constant_part();
            return match sense {
                ConstraintSense::Le => c <= CERTIFICATE_TOL,
                ConstraintSense::Ge => c >= -CERTIFICATE_TOL,
                ConstraintSense::Eq => c.abs() <= CERTIFICATE_TOL,
            };
        }
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: expr.terms().map(|(v, c)| (v.0, c)).collect(),
            sense,
            rhs: -expr.constant_part(),
        });
        true
    }

    pub fn set_objective(&mut self, expr: &LinExpr) {
        self.objective = expr.terms().map(|(v, c)| (v.0, c)).collect();
        self.objective_constant = expr.constant_part();
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(j, c)| c * values[j]).sum::<f64>()
    }

    /// Largest constraint or sign violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values));
        let signs = self
            .variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.nonnegative)
            .map(|(_, &x)| (-x).max(0.0));
        rows.chain(signs).fold(0.0, f64::max)
    }

    /// Removes exact duplicate rows.
    pub fn dedup_constraints(&mut self) {
        let mut seen = std::collections::HashSet::new();
        self.constraints.retain(|c| {
            let key: Vec<(usize, u64)> = c.coeffs.iter().map(|&(j, a)| (j, a.to_bits())).collect();
            seen.insert((key, c.rhs.to_bits(), c.sense as u8))
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value including the constant, when optimal.
    pub objective: Option<f64>,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Largest constraint violation of `values` re-evaluated on the original rows.
    pub max_violation: f64,
}

pub trait LpSolver {
    fn solve(&self, spec: &LinearProgramSpec) -> Result<LpSolution>;
}
