//! Dense two-phase tableau simplex.
//!
//! Free variables are kept as single columns: a free column may enter with
//! either sign (the column is negated when it has to decrease) and is never
//! chosen to leave. Entering columns follow Dantzig's rule and fall back to
//! Bland's rule after a run of degenerate pivots.

use crate::error::{Error, Result};
use crate::lp::{ConstraintSense, Direction, LinearProgramSpec, LpSolution, LpSolver, LpStatus};

/// Primal feasibility slack allowed by the relaxed ratio test.
const HARRIS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DenseSimplex {
    pub pivot_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub cost_tol: f64,
    /// Phase-one objective above which the problem is declared infeasible (relative to `max |b|`).
    pub feasibility_tol: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub degenerate_limit: usize,
    /// Iteration cap; `None` derives one from the problem size.
    pub max_iterations: Option<usize>,
    /// Relative size of the right-hand-side relaxation used against
    /// degeneracy; zero disables it.
    pub perturbation: f64,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-7,
            cost_tol: 1e-9,
            feasibility_tol: 1e-8,
            degenerate_limit: 50,
            max_iterations: None,
            perturbation: 1e-7,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`; the last entry of each row is the right-hand side.
    a: Vec<f64>,
    /// Reduced costs, last entry is minus the objective value.
    d: Vec<f64>,
    basis: Vec<usize>,
    kind: Vec<ColKind>,
    free: Vec<bool>,
    flipped: Vec<bool>,
    enabled: Vec<bool>,
    iterations: usize,
    degenerate_run: usize,
    pivot_tol: f64,
    scratch: Vec<usize>,
    /// Column holding the unit vector of each original row (a column of `B^{-1}`).
    unit: Vec<usize>,
    /// Change of each normalized right-hand side that undoes the perturbation.
    restore: Vec<f64>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.a[i * w..(i + 1) * w]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.width() + self.cols]
    }

    fn build(spec: &LinearProgramSpec, pivot_tol: f64, perturbation: f64) -> Self {
        let n = spec.variables.len();
        let m = spec.constraints.len();
        // inequalities are relaxed by a small, row-dependent amount
        let golden = 0.618_033_988_749_894_9_f64;
        let rhs: Vec<f64> = spec
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let eps = perturbation * (1.0 + c.rhs.abs()) * (1.0 + (i as f64 * golden).fract());
                match c.sense {
                    ConstraintSense::Le => c.rhs + eps,
                    ConstraintSense::Ge => c.rhs - eps,
                    ConstraintSense::Eq => c.rhs,
                }
            })
            .collect();
        // normalize to b >= 0
        let mut senses = Vec::with_capacity(m);
        for (c, &b) in spec.constraints.iter().zip(&rhs) {
            let sense = if b < 0.0 {
                match c.sense {
                    ConstraintSense::Le => ConstraintSense::Ge,
                    ConstraintSense::Ge => ConstraintSense::Le,
                    ConstraintSense::Eq => ConstraintSense::Eq,
                }
            } else {
                c.sense
            };
            senses.push(sense);
        }
        let slacks = senses.iter().filter(|s| **s != ConstraintSense::Eq).count();
        let arts = senses.iter().filter(|s| **s != ConstraintSense::Le).count();
        let cols = n + slacks + arts;
        let w = cols + 1;
        let mut a = vec![0.0; m * w];
        let mut kind = vec![ColKind::Structural; n];
        kind.extend(std::iter::repeat(ColKind::Slack).take(slacks));
        kind.extend(std::iter::repeat(ColKind::Artificial).take(arts));
        let mut free: Vec<bool> = spec.variables.iter().map(|v| !v.nonnegative).collect();
        free.resize(cols, false);
        let mut basis = vec![0; m];
        let mut restore = vec![0.0; m];
        let (mut s, mut t) = (n, n + slacks);
        for (i, c) in spec.constraints.iter().enumerate() {
            let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut a[i * w..(i + 1) * w];
            for &(j, coef) in &c.coeffs {
                row[j] += sign * coef;
            }
            row[cols] = sign * rhs[i];
            restore[i] = sign * (c.rhs - rhs[i]);
            match senses[i] {
                ConstraintSense::Le => {
                    row[s] = 1.0;
                    basis[i] = s;
                    s += 1;
                }
                ConstraintSense::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[t] = 1.0;
                    basis[i] = t;
                    t += 1;
                }
                ConstraintSense::Eq => {
                    row[t] = 1.0;
                    basis[i] = t;
                    t += 1;
                }
            }
        }
        Tableau {
            rows: m,
            cols,
            a,
            d: vec![0.0; w],
            unit: basis.clone(),
            restore,
            basis,
            kind,
            free,
            flipped: vec![false; cols],
            enabled: vec![true; cols],
            iterations: 0,
            degenerate_run: 0,
            pivot_tol,
            scratch: Vec::new(),
        }
    }

    /// Sets the reduced costs for the column costs `c`.
    fn price(&mut self, c: &[f64]) {
        let w = self.width();
        self.d.clear();
        self.d.extend_from_slice(c);
        self.d.push(0.0);
        for i in 0..self.rows {
            let cb = c[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * w..(i + 1) * w];
            for (dj, &aij) in self.d.iter_mut().zip(row) {
                *dj -= cb * aij;
            }
        }
    }

    fn negate_column(&mut self, j: usize) {
        let w = self.width();
        for i in 0..self.rows {
            self.a[i * w + j] = -self.a[i * w + j];
        }
        self.d[j] = -self.d[j];
        self.flipped[j] = !self.flipped[j];
    }

    fn choose_entering(&mut self, tol: f64, bland: bool, skip: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if !self.enabled[j] || skip[j] {
                continue;
            }
            let dj = self.d[j];
            let score = if self.free[j] { dj.abs() } else { -dj };
            if score <= tol {
                continue;
            }
            if bland {
                best = Some((j, score));
                break;
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let (j, _) = best?;
        if self.free[j] && self.d[j] > 0.0 {
            self.negate_column(j);
        }
        Some(j)
    }

    /// Ratio test. Dantzig mode uses two passes (Harris): the bound on the
    /// step is relaxed by `HARRIS_TOL`, then the largest pivot within it wins.
    /// Bland mode takes the exact minimum and breaks ties by basis index.
    fn choose_leaving(&self, j: usize, bland: bool) -> Option<usize> {
        let w = self.width();
        let candidates = (0..self.rows).filter(|&i| {
            let aij = self.a[i * w + j];
            aij > self.pivot_tol && !self.free[self.basis[i]]
        });
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for i in candidates {
                let ratio = self.rhs(i).max(0.0) / self.a[i * w + j];
                let better = match best {
                    None => true,
                    Some((bi, br)) => {
                        if (ratio - br).abs() <= 1e-12 * br.max(1.0) {
                            self.basis[i] < self.basis[bi]
                        } else {
                            ratio < br
                        }
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            return best.map(|(i, _)| i);
        }
        let rows: Vec<usize> = candidates.collect();
        let bound = rows
            .iter()
            .map(|&i| (self.rhs(i).max(0.0) + HARRIS_TOL) / self.a[i * w + j])
            .fold(f64::INFINITY, f64::min);
        rows.into_iter()
            .filter(|&i| self.rhs(i).max(0.0) / self.a[i * w + j] <= bound)
            .max_by(|&x, &y| self.a[x * w + j].total_cmp(&self.a[y * w + j]))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width();
        let p = self.a[r * w + j];
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            for x in row.iter_mut() {
                *x /= p;
            }
            row[j] = 1.0;
        }
        self.scratch.clear();
        for k in 0..w {
            let v = self.a[r * w + k];
            if v != 0.0 {
                self.scratch.push(k);
            }
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let nz = &self.scratch;
        let update = |row: &mut [f64]| {
            let f = row[j];
            if f == 0.0 {
                return;
            }
            for &k in nz {
                let v = row[k] - f * prow[k];
                row[k] = v;
            }
            row[j] = 0.0;
        };
        before.chunks_exact_mut(w).for_each(update);
        after.chunks_exact_mut(w).for_each(update);
        update(&mut self.d);
        self.basis[r] = j;
        self.iterations += 1;
    }

    fn run(&mut self, solver: &DenseSimplex, cap: usize) -> Result<Outcome> {
        // basic columns, plus columns whose only increasing rows have
        // entries below the pivot tolerance (cleared after the next pivot)
        let mut skip = vec![false; self.cols];
        for &b in &self.basis {
            skip[b] = true;
        }
        let mut blocked: Vec<usize> = Vec::new();
        self.degenerate_run = 0;
        loop {
            if self.iterations >= cap {
                return Err(Error::Numerical(format!(
                    "iteration limit {cap} reached ({} rows, {} columns)",
                    self.rows, self.cols
                )));
            }
            let bland = self.degenerate_run >= solver.degenerate_limit;
            let Some(j) = self.choose_entering(solver.cost_tol, bland, &skip) else {
                return Ok(Outcome::Optimal);
            };
            let Some(r) = self.choose_leaving(j, bland) else {
                let w = self.width();
                let tiny = (0..self.rows).any(|i| !self.free[self.basis[i]] && self.a[i * w + j] > 1e-12);
                if !tiny {
                    return Ok(Outcome::Unbounded);
                }
                skip[j] = true;
                blocked.push(j);
                continue;
            };
            for b in blocked.drain(..) {
                skip[b] = false;
            }
            let w = self.width();
            let step = self.rhs(r).max(0.0) / self.a[r * w + j];
            if step <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            skip[self.basis[r]] = false;
            skip[j] = true;
            self.pivot(r, j);
        }
    }

    /// Replaces the perturbed right-hand sides by the original ones.
    fn remove_perturbation(&mut self) {
        let w = self.width();
        let shifts: Vec<(usize, f64)> = self
            .unit
            .iter()
            .zip(&self.restore)
            .filter(|(_, &r)| r != 0.0)
            .map(|(&u, &r)| (u, r))
            .collect();
        for i in 0..self.rows {
            let row = &mut self.a[i * w..(i + 1) * w];
            let delta: f64 = shifts.iter().map(|&(u, r)| row[u] * r).sum();
            row[self.cols] += delta;
        }
    }

    /// Dual simplex pivots until every restricted basic variable is at least
    /// `-tol`. Returns `false` when some row proves primal infeasibility.
    fn dual_cleanup(&mut self, tol: f64, cap: usize) -> Result<bool> {
        let w = self.width();
        loop {
            let leaving = (0..self.rows)
                .filter(|&i| !self.free[self.basis[i]] && self.rhs(i) < -tol)
                .min_by(|&x, &y| self.rhs(x).total_cmp(&self.rhs(y)));
            let Some(r) = leaving else { return Ok(true) };
            if self.iterations >= cap {
                return Err(Error::Numerical("iteration limit reached while restoring feasibility".into()));
            }
            let mut is_basic = vec![false; self.cols];
            for &b in &self.basis {
                is_basic[b] = true;
            }
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.cols {
                if !self.enabled[j] || is_basic[j] {
                    continue;
                }
                let arj = self.a[r * w + j];
                let usable = if self.free[j] { arj.abs() > self.pivot_tol } else { arj < -self.pivot_tol };
                if !usable {
                    continue;
                }
                let ratio = self.d[j].abs() / arj.abs();
                let better = best.is_none_or(|(_, br, ba)| {
                    ratio < br - 1e-12 || (ratio <= br + 1e-12 && arj.abs() > ba)
                });
                if better {
                    best = Some((j, ratio, arj.abs()));
                }
            }
            let Some((j, _, _)) = best else { return Ok(false) };
            if self.free[j] && self.a[r * w + j] > 0.0 {
                self.negate_column(j);
            }
            self.pivot(r, j);
        }
    }

    /// Pivots basic artificials out at zero level and drops redundant rows.
    fn expel_artificials(&mut self, tol: f64) {
        let w = self.width();
        let mut drop = Vec::new();
        for i in 0..self.rows {
            if self.kind[self.basis[i]] != ColKind::Artificial {
                continue;
            }
            let row = self.row(i);
            let candidate = (0..self.cols)
                .filter(|&j| self.kind[j] != ColKind::Artificial && row[j].abs() > tol)
                .max_by(|&x, &y| row[x].abs().total_cmp(&row[y].abs()));
            match candidate {
                Some(j) => self.pivot(i, j),
                None => drop.push(i),
            }
        }
        if !drop.is_empty() {
            let mut keep_a = Vec::with_capacity(self.a.len());
            let mut keep_b = Vec::with_capacity(self.basis.len());
            for i in 0..self.rows {
                if !drop.contains(&i) {
                    keep_a.extend_from_slice(&self.a[i * w..(i + 1) * w]);
                    keep_b.push(self.basis[i]);
                }
            }
            self.a = keep_a;
            self.basis = keep_b;
            self.rows = self.basis.len();
        }
        for j in 0..self.cols {
            if self.kind[j] == ColKind::Artificial {
                self.enabled[j] = false;
            }
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, spec: &LinearProgramSpec) -> Result<LpSolution> {
        for c in &spec.constraints {
            if let Some(&(j, _)) = c.coeffs.iter().find(|(j, _)| *j >= spec.variables.len()) {
                return Err(Error::Lp(format!(
                    "constraint `{}` references unknown variable {j}",
                    c.name
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|(_, a)| !a.is_finite()) {
                return Err(Error::Lp(format!("constraint `{}` has non-finite data", c.name)));
            }
        }
        let n = spec.variables.len();
        let mut t = Tableau::build(spec, self.pivot_tol, self.perturbation);
        let cap = self
            .max_iterations
            .unwrap_or(20 * (t.rows + t.cols) + 10_000);

        // phase one
        let has_artificials = t.kind.contains(&ColKind::Artificial);
        if has_artificials {
            let c1: Vec<f64> = t
                .kind
                .iter()
                .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
                .collect();
            t.price(&c1);
            if let Outcome::Unbounded = t.run(self, cap)? {
                return Err(Error::Numerical("phase one reported an unbounded ray".into()));
            }
            let infeasibility = -t.d[t.cols];
            let scale = spec
                .constraints
                .iter()
                .map(|c| c.rhs.abs())
                .fold(1.0, f64::max);
            if infeasibility > self.feasibility_tol * scale {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: None,
                    values: Vec::new(),
                    iterations: t.iterations,
                    max_violation: f64::NAN,
                });
            }
            t.expel_artificials(self.pivot_tol);
        }

        // phase two
        let sign = match spec.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let mut c2 = vec![0.0; t.cols];
        for &(j, coef) in &spec.objective {
            c2[j] += sign * coef;
        }
        for (j, cj) in c2.iter_mut().enumerate().take(n) {
            if t.flipped[j] {
                *cj = -*cj;
            }
        }
        t.price(&c2);
        let outcome = t.run(self, cap)?;
        if let Outcome::Unbounded = outcome {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: None,
                values: Vec::new(),
                iterations: t.iterations,
                max_violation: f64::NAN,
            });
        }
        if self.perturbation > 0.0 {
            t.remove_perturbation();
            if !t.dual_cleanup(1e-11, cap)? {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: None,
                    values: Vec::new(),
                    iterations: t.iterations,
                    max_violation: f64::NAN,
                });
            }
        }
        let mut values = vec![0.0; n];
        for i in 0..t.rows {
            let b = t.basis[i];
            if b < n {
                values[b] = t.rhs(i);
            }
        }
        for (j, v) in values.iter_mut().enumerate() {
            if t.flipped[j] {
                *v = -*v;
            }
            if spec.variables[j].nonnegative && *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: Some(spec.objective_value(&values)),
            max_violation: spec.max_violation(&values),
            values,
            iterations: t.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinExpr, VarId};
    use proptest::prelude::*;

    fn solve(spec: &LinearProgramSpec) -> LpSolution {
        DenseSimplex::default().solve(spec).unwrap()
    }

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgramSpec::new("toy", Direction::Minimize);
        let x = lp.add_variable("x", false);
        lp.add_constraint("x>=3", &(LinExpr::var(x) - LinExpr::constant(3.0)), ConstraintSense::Ge);
        lp.set_objective(&LinExpr::var(x));
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_toy() {
        let mut lp = LinearProgramSpec::new("toy", Direction::Minimize);
        let x = lp.add_variable("x", true);
        lp.add_constraint("x<=-1", &(LinExpr::var(x) + LinExpr::constant(1.0)), ConstraintSense::Le);
        lp.set_objective(&LinExpr::var(x));
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_toy() {
        let mut lp = LinearProgramSpec::new("toy", Direction::Maximize);
        let x = lp.add_variable("x", false);
        let y = lp.add_variable("y", true);
        lp.add_constraint("c", &(LinExpr::var(x) - LinExpr::var(y)), ConstraintSense::Le);
        lp.set_objective(&LinExpr::var(x));
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let mut lp = LinearProgramSpec::new("wyndor", Direction::Maximize);
        let x = lp.add_variable("x", true);
        let y = lp.add_variable("y", true);
        let v = |e: Vec<(VarId, f64)>, c: f64| {
            let mut l = LinExpr::constant(c);
            for (id, a) in e {
                l.add_term(id, a);
            }
            l
        };
        lp.add_constraint("a", &v(vec![(x, 1.0)], -4.0), ConstraintSense::Le);
        lp.add_constraint("b", &v(vec![(y, 2.0)], -12.0), ConstraintSense::Le);
        lp.add_constraint("c", &v(vec![(x, 3.0), (y, 2.0)], -18.0), ConstraintSense::Le);
        lp.set_objective(&v(vec![(x, 3.0), (y, 5.0)], 0.0));
        let s = solve(&lp);
        assert!((s.objective.unwrap() - 36.0).abs() < 1e-10);
        assert!((s.values[0] - 2.0).abs() < 1e-10 && (s.values[1] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn equality_and_redundant_rows() {
        let mut lp = LinearProgramSpec::new("eq", Direction::Minimize);
        let x = lp.add_variable("x", true);
        let y = lp.add_variable("y", false);
        let e = LinExpr::var(x) + LinExpr::var(y) - LinExpr::constant(2.0);
        lp.add_constraint("e1", &e, ConstraintSense::Eq);
        lp.add_constraint("e2", &(e.clone() * 2.0), ConstraintSense::Eq);
        lp.add_constraint("y>=-1", &(LinExpr::var(y) + LinExpr::constant(1.0)), ConstraintSense::Ge);
        lp.set_objective(&(LinExpr::var(x) * 2.0 + LinExpr::var(y)));
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective.unwrap() - 2.0).abs() < 1e-10);
        assert!(s.max_violation < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule without anti-cycling.
        let mut lp = LinearProgramSpec::new("beale", Direction::Minimize);
        let x: Vec<VarId> = (0..4).map(|i| lp.add_variable(format!("x{i}"), true)).collect();
        let row = |c: [f64; 4], b: f64| {
            let mut e = LinExpr::constant(-b);
            for (i, a) in c.iter().enumerate() {
                e.add_term(x[i], *a);
            }
            e
        };
        lp.add_constraint("r1", &row([0.25, -8.0, -1.0, 9.0], 0.0), ConstraintSense::Le);
        lp.add_constraint("r2", &row([0.5, -12.0, -0.5, 3.0], 0.0), ConstraintSense::Le);
        lp.add_constraint("r3", &row([0.0, 0.0, 1.0, 0.0], 1.0), ConstraintSense::Le);
        lp.set_objective(&row([-0.75, 20.0, -0.5, 6.0], 0.0));
        let s = DenseSimplex {
            degenerate_limit: 0,
            ..DenseSimplex::default()
        }
        .solve(&lp)
        .unwrap();
        assert!((s.objective.unwrap() + 1.25).abs() < 1e-10);
    }

    #[test]
    fn iteration_cap_is_a_numerical_error() {
        let mut lp = LinearProgramSpec::new("cap", Direction::Maximize);
        let x = lp.add_variable("x", true);
        let y = lp.add_variable("y", true);
        lp.add_constraint("c", &(LinExpr::var(x) + LinExpr::var(y) - LinExpr::constant(1.0)), ConstraintSense::Le);
        lp.set_objective(&(LinExpr::var(x) + LinExpr::var(y) * 2.0));
        let solver = DenseSimplex {
            max_iterations: Some(0),
            ..DenseSimplex::default()
        };
        assert!(matches!(solver.solve(&lp), Err(Error::Numerical(_))));
    }

    proptest! {
        // random bounded feasible problems: the solution is feasible and no
        // sampled feasible point beats it
        #[test]
        fn random_programs_are_solved_to_optimality(
            coeffs in proptest::collection::vec(-5.0f64..5.0, 12),
            costs in proptest::collection::vec(-3.0f64..3.0, 3),
            samples in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 50),
        ) {
            let mut lp = LinearProgramSpec::new("rand", Direction::Minimize);
            let x: Vec<VarId> = (0..3).map(|i| lp.add_variable(format!("x{i}"), false)).collect();
            // box -1 <= x_i <= 1 keeps the problem bounded; origin stays feasible
            for &xi in &x {
                lp.add_constraint("ub", &(LinExpr::var(xi) - LinExpr::constant(1.0)), ConstraintSense::Le);
                lp.add_constraint("lb", &(LinExpr::var(xi) + LinExpr::constant(1.0)), ConstraintSense::Ge);
            }
            for r in 0..4 {
                let mut e = LinExpr::constant(-1.0);
                for i in 0..3 {
                    e.add_term(x[i], coeffs[3 * r + i]);
                }
                lp.add_constraint(format!("r{r}"), &e, ConstraintSense::Le);
            }
            let mut obj = LinExpr::zero();
            for i in 0..3 {
                obj.add_term(x[i], costs[i]);
            }
            lp.set_objective(&obj);
            let s = solve(&lp);
            prop_assert_eq!(s.status, LpStatus::Optimal);
            prop_assert!(s.max_violation < 1e-9);
            let best = s.objective.unwrap();
            for p in samples {
                let pt: Vec<f64> = p.iter().map(|v| 2.0 * v - 1.0).collect();
                if lp.max_violation(&pt) == 0.0 {
                    prop_assert!(lp.objective_value(&pt) >= best - 1e-9);
                }
            }
        }
    }
}
