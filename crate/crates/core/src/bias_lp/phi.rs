//! Flow decompositions of the one-step difference `P(n+u, .) - P(n, .)`.
//!
//! For a refined component `Z_j` and a step `u`, offsets `w` relative to `n`
//! carry the signed demand `p_{c(n+u), w-u} - p_{c(n), w}`. An arc
//! `d -> d + v` moves mass from `n+d` to `n+d+v` and is weighted by
//! `phi_{j,u,d,v} >= 0`. Balanced flows give, for every function `g`,
//! `sum_m (P(n+u,m) - P(n,m)) g(m) = sum phi (g(n+d+v) - g(n+d))`.
//! Tails `d` range over the reach cube of the refinement and steps `v` over
//! the admissible steps of `c(n+d)` that belong to the step set.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{ConstraintSense, Direction, LinExpr, LinearProgramSpec, LpSolver, LpStatus};
use crate::lp::DenseSimplex;
use crate::model::geometry::{Step, UpperBound};
use crate::model::walk::RandomWalkModel;
use crate::refinement::{reach_cube, Refinement};

/// Weights below this are dropped from a solved decomposition.
const WEIGHT_EPS: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiArc {
    pub d: Vec<i64>,
    pub v: Step,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiEntry {
    pub j: usize,
    pub u: Step,
    pub arcs: Vec<PhiArc>,
}

impl PhiEntry {
    pub fn total_mass(&self) -> f64 {
        self.arcs.iter().map(|a| a.weight).sum()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhiTable {
    entries: Vec<PhiEntry>,
    #[serde(skip)]
    index: HashMap<(usize, Step), usize>,
}

impl PhiTable {
    pub fn entries(&self) -> &[PhiEntry] {
        &self.entries
    }

    pub fn get(&self, j: usize, u: &Step) -> Option<&PhiEntry> {
        self.index.get(&(j, u.clone())).map(|&i| &self.entries[i])
    }

    pub fn insert(&mut self, entry: PhiEntry) {
        let key = (entry.j, entry.u.clone());
        match self.index.get(&key) {
            Some(&i) => self.entries[i] = entry,
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push(entry);
            }
        }
    }

    pub fn entries_mut(&mut self) -> &mut [PhiEntry] {
        &mut self.entries
    }
}

/// Signed demand of the pair `(j, u)` keyed by offset.
fn demand(model: &RandomWalkModel, z: &Refinement, j: usize, u: &Step) -> Result<BTreeMap<Vec<i64>, f64>> {
    let k = z.component(j).parent();
    let ku = z.shift_component(j, &u.as_i64())?;
    let mut mu: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (w, p) in model.component(k).transitions() {
        *mu.entry(w.as_i64()).or_default() -= p;
    }
    for (v, p) in model.component(ku).transitions() {
        let w: Vec<i64> = u.as_i64().iter().zip(v.as_i64()).map(|(a, b)| a + b).collect();
        *mu.entry(w).or_default() += p;
    }
    Ok(mu)
}

/// Candidate arcs `(d, v)` for refined component `j`.
fn arcs(model: &RandomWalkModel, z: &Refinement, j: usize, steps: &[Step]) -> Result<Vec<(Vec<i64>, Step)>> {
    let mut out = Vec::new();
    for d in reach_cube(z.dim(), z.reach()) {
        let Some(kd) = z.try_shift(j, &d)? else { continue };
        for v in steps {
            if !v.is_zero() && model.component(kd).admits(v) {
                out.push((d.clone(), v.clone()));
            }
        }
    }
    Ok(out)
}

/// Minimal-mass decomposition for the pair `(j, u)`.
pub fn solve_phi(model: &RandomWalkModel, z: &Refinement, j: usize, u: &Step, steps: &[Step]) -> Result<PhiEntry> {
    if !model.component(z.component(j).parent()).admits(u) {
        return Err(Error::InvalidStep(format!(
            "step {u} is not admissible in refined component {j}"
        )));
    }
    let mu = demand(model, z, j, u)?;
    let arcs = arcs(model, z, j, steps)?;
    let head = |d: &[i64], v: &Step| -> Vec<i64> { d.iter().zip(v.as_i64()).map(|(a, b)| a + b).collect() };

    let mut lp = LinearProgramSpec::new(format!("phi j={j} u={u}"), Direction::Minimize);
    let vars: Vec<_> = (0..arcs.len()).map(|a| lp.add_variable(format!("phi{a}"), true)).collect();
    let mut balance: BTreeMap<Vec<i64>, LinExpr> = BTreeMap::new();
    for (w, &m) in &mu {
        balance.entry(w.clone()).or_insert_with(LinExpr::zero).add_constant(-m);
    }
    for ((d, v), &x) in arcs.iter().zip(&vars) {
        balance.entry(head(d, v)).or_insert_with(LinExpr::zero).add_term(x, 1.0);
        balance.entry(d.clone()).or_insert_with(LinExpr::zero).add_term(x, -1.0);
    }
    let mut trivially_infeasible = false;
    for (w, e) in &balance {
        if !lp.add_constraint(format!("balance {w:?}"), e, ConstraintSense::Eq) {
            trivially_infeasible = true;
        }
    }
    let infeasible = || Error::PhiInfeasible {
        component: j,
        step: u.to_string(),
    };
    if trivially_infeasible {
        return Err(infeasible());
    }
    let mut obj = LinExpr::zero();
    for &x in &vars {
        obj.add_term(x, 1.0);
    }
    lp.set_objective(&obj);
    let sol = DenseSimplex::default().solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(infeasible());
    }
    let arcs = arcs
        .into_iter()
        .zip(sol.values)
        .filter(|(_, w)| *w > WEIGHT_EPS)
        .map(|((d, v), weight)| PhiArc { d, v, weight })
        .collect();
    Ok(PhiEntry { j, u: u.clone(), arcs })
}

/// Decompositions for every refined component and every step of `steps`
/// admissible there. Pairs with identical demand and arc structure share
/// one solve.
pub fn build_phi_table(model: &RandomWalkModel, z: &Refinement, steps: &[Step]) -> Result<PhiTable> {
    let mut table = PhiTable::default();
    let mut cache: HashMap<Vec<u8>, Vec<PhiArc>> = HashMap::new();
    for j in 0..z.len() {
        let k = z.component(j).parent();
        for u in steps {
            if u.is_zero() || !model.component(k).admits(u) {
                continue;
            }
            let mu = demand(model, z, j, u)?;
            let candidate = arcs(model, z, j, steps)?;
            let key = serde_json::to_vec(&(
                mu.iter().map(|(w, m)| (w, m.to_bits())).collect::<Vec<_>>(),
                &candidate,
            ))
            .expect("serializable key");
            let arcs = match cache.get(&key) {
                Some(a) => a.clone(),
                None => {
                    let e = solve_phi(model, z, j, u, steps)?;
                    cache.insert(key, e.arcs.clone());
                    e.arcs
                }
            };
            table.insert(PhiEntry { j, u: u.clone(), arcs });
        }
    }
    Ok(table)
}

/// Residual of the decomposition identity of `entry` at state `n` for `g`.
pub fn identity_residual(
    model: &RandomWalkModel,
    entry: &PhiEntry,
    n: &[i64],
    g: &mut dyn FnMut(&[i64]) -> f64,
) -> f64 {
    let add = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let nu = add(n, &entry.u.as_i64());
    let mut lhs = 0.0;
    for (v, p) in model.component(model.component_of(&nu)).transitions() {
        lhs += p * g(&add(&nu, &v.as_i64()));
    }
    for (w, p) in model.component(model.component_of(n)).transitions() {
        lhs -= p * g(&add(n, &w.as_i64()));
    }
    let mut rhs = 0.0;
    for a in &entry.arcs {
        let nd = add(n, &a.d);
        rhs += a.weight * (g(&add(&nd, &a.v.as_i64())) - g(&nd));
    }
    (lhs - rhs).abs()
}

/// Random states of `Z_j`: the corner plus offsets below `spread` in each
/// unbounded coordinate.
pub fn sample_states(z: &Refinement, j: usize, count: usize, spread: i64, rng: &mut impl Rng) -> Vec<Vec<i64>> {
    let c = z.component(j);
    let mut out = vec![c.lower().to_vec()];
    while out.len() < count.max(1) {
        let n = c
            .lower()
            .iter()
            .zip(c.upper())
            .map(|(&l, u)| match u {
                UpperBound::Infinite => l + rng.random_range(0..spread),
                UpperBound::Finite(_) => l,
            })
            .collect();
        out.push(n);
    }
    out
}

/// Largest identity residual over `functions` random bounded test functions
/// and `states` sampled states per table entry.
pub fn verify_phi(
    model: &RandomWalkModel,
    z: &Refinement,
    table: &PhiTable,
    functions: usize,
    states: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..functions {
        let mut values: HashMap<Vec<i64>, f64> = HashMap::new();
        let mut fn_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let mut g = |m: &[i64]| *values.entry(m.to_vec()).or_insert_with(|| fn_rng.random_range(-1.0..1.0));
        for e in table.entries() {
            for n in sample_states(z, e.j, states, 25, &mut rng) {
                worst = worst.max(identity_residual(model, e, &n, &mut g));
            }
        }
    }
    worst
}
