//! Ground truth on a truncated state space.
//!
//! The box `{0..T}^M` carries the walk with every transition that would
//! leave it redirected to the self-loop. Quantities that depend on the
//! truncation are reported only where they coincide with the untruncated
//! chain: `F^t(n)` is exact when `n_i + t - 1 <= T` in every coordinate,
//! because no path of the first `t - 1` steps can hit the upper face before
//! that.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bias_lp::{BoundKind, BoundReport, PhiTable, Side};
use crate::error::{Error, Result};
use crate::families::Instance;
use crate::model::geometry::{State, Step};
use crate::model::piecewise::PiecewiseFn;
use crate::model::product_form::ProductFormDistribution;
use crate::model::walk::RandomWalkModel;
use crate::refinement::Refinement;

/// Tolerance of the envelope and bracket checks.
pub const VALIDATION_TOL: f64 = 1e-6;

/// Walk restricted to `{0..T}^M`, stored as sparse rows.
#[derive(Clone, Debug)]
pub struct TruncatedChain {
    model: RandomWalkModel,
    truncation: i64,
    dim: usize,
    states: Vec<Vec<i64>>,
    comps: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TruncatedChain {
    pub fn new(model: &RandomWalkModel, truncation: i64) -> Result<Self> {
        if truncation < 1 {
            return Err(Error::Oracle(format!("truncation must be at least 1, got {truncation}")));
        }
        let dim = model.dim();
        let side = (truncation + 1) as usize;
        let len = side
            .checked_pow(dim as u32)
            .filter(|&l| l <= 50_000_000)
            .ok_or_else(|| Error::Oracle(format!("truncation {truncation} too large in dimension {dim}")))?;
        let mut chain = Self {
            model: model.clone(),
            truncation,
            dim,
            states: Vec::with_capacity(len),
            comps: Vec::with_capacity(len),
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        };
        for idx in 0..len {
            let mut n = vec![0i64; dim];
            let mut r = idx;
            for x in n.iter_mut().rev() {
                *x = (r % side) as i64;
                r /= side;
            }
            chain.comps.push(model.component_of(&n));
            chain.states.push(n);
        }
        for idx in 0..len {
            let n = &chain.states[idx];
            let mut hold = 0.0;
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (u, p) in model.component(chain.comps[idx]).transitions() {
                let m: Vec<i64> = n.iter().zip(u.offsets()).map(|(&a, &b)| a + i64::from(b)).collect();
                match chain.index(&m) {
                    Some(j) if j != idx => row.push((j, p)),
                    _ => hold += p,
                }
            }
            if hold > 0.0 {
                row.push((idx, hold));
            }
            row.sort_by_key(|&(j, _)| j);
            for (j, p) in row {
                chain.cols.push(j);
                chain.vals.push(p);
            }
            chain.row_ptr.push(chain.cols.len());
        }
        Ok(chain)
    }

    pub fn model(&self) -> &RandomWalkModel {
        &self.model
    }

    /// `T`: largest coordinate value kept.
    pub fn truncation(&self) -> i64 {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, idx: usize) -> &[i64] {
        &self.states[idx]
    }

    pub fn states(&self) -> &[Vec<i64>] {
        &self.states
    }

    /// Partition component of the state with index `idx`.
    pub fn component(&self, idx: usize) -> usize {
        self.comps[idx]
    }

    pub fn index(&self, n: &[i64]) -> Option<usize> {
        if n.len() != self.dim {
            return None;
        }
        let side = self.truncation + 1;
        let mut idx = 0i64;
        for &x in n {
            if !(0..side).contains(&x) {
                return None;
            }
            idx = idx * side + x;
        }
        Some(idx as usize)
    }

    pub fn row(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[idx]..self.row_ptr[idx + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `(P f)(n) = sum_m P(n, m) f(m)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.row(i).map(|(j, p)| p * f[j]).sum()).collect()
    }

    /// Row vector times the transition matrix.
    pub fn push_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (j, p) in self.row(i) {
                    y[j] += xi * p;
                }
            }
        }
        y
    }

    /// Values of `f` at every state of the box.
    pub fn tabulate(&self, f: &PiecewiseFn) -> Vec<f64> {
        self.states.iter().zip(&self.comps).map(|(n, &k)| f.value_at(k, n)).collect()
    }

    /// Whether `F^t(n)` computed on the box equals its untruncated value.
    pub fn is_exact(&self, n: &[i64], t: usize) -> bool {
        t == 0 || n.iter().all(|&x| x + t as i64 - 1 <= self.truncation)
    }
}

/// Iterates `F^0 = 0`, `F^{t+1} = F + P F^t`, one vector per step.
pub struct RewardIterates<'a> {
    chain: &'a TruncatedChain,
    reward: Vec<f64>,
    current: Option<Vec<f64>>,
}

impl<'a> RewardIterates<'a> {
    pub fn new(chain: &'a TruncatedChain, f: &PiecewiseFn) -> Self {
        Self {
            chain,
            reward: chain.tabulate(f),
            current: None,
        }
    }
}

impl Iterator for RewardIterates<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let next = match &self.current {
            None => vec![0.0; self.chain.len()],
            Some(prev) => {
                let mut v = self.chain.apply(prev);
                v.iter_mut().zip(&self.reward).for_each(|(a, b)| *a += b);
                v
            }
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// `F^0, ..., F^{t_max}` on the whole box.
pub fn iterate_reward(chain: &TruncatedChain, f: &PiecewiseFn, t_max: usize) -> Vec<Vec<f64>> {
    RewardIterates::new(chain, f).take(t_max + 1).collect()
}

/// `D^t_u(n) = F^t(n+u) - F^t(n)` for every non-zero step, reported where
/// both iterates are exact and `u` is admissible at `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasField {
    pub t: usize,
    pub steps: Vec<Step>,
    /// `values[s][idx]` for step `steps[s]` at state index `idx`.
    pub values: Vec<Vec<Option<f64>>>,
}

impl BiasField {
    fn from_iterate(chain: &TruncatedChain, t: usize, ft: &[f64], steps: &[Step]) -> Self {
        let values = steps
            .iter()
            .map(|u| {
                (0..chain.len())
                    .map(|i| {
                        let n = chain.state(i);
                        if !chain.model.component(chain.comps[i]).admits(u) || !chain.is_exact(n, t) {
                            return None;
                        }
                        let m: Vec<i64> = n.iter().zip(u.offsets()).map(|(&a, &b)| a + i64::from(b)).collect();
                        let j = chain.index(&m)?;
                        chain.is_exact(&m, t).then(|| ft[j] - ft[i])
                    })
                    .collect()
            })
            .collect();
        Self {
            t,
            steps: steps.to_vec(),
            values,
        }
    }

    pub fn get(&self, chain: &TruncatedChain, n: &[i64], u: &Step) -> Option<f64> {
        let s = self.steps.iter().position(|v| v == u)?;
        self.values[s][chain.index(n)?]
    }

    /// Largest reported `|D^t_u(n)|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn nonzero_steps(dim: usize) -> Vec<Step> {
    Step::all(dim).into_iter().filter(|u| !u.is_zero()).collect()
}

/// Visits the bias fields for `t = 0..=t_max` without storing them.
pub fn scan_bias(chain: &TruncatedChain, f: &PiecewiseFn, t_max: usize, mut visit: impl FnMut(&[f64], &BiasField)) {
    let steps = nonzero_steps(chain.dim());
    for (t, ft) in RewardIterates::new(chain, f).take(t_max + 1).enumerate() {
        visit(&ft, &BiasField::from_iterate(chain, t, &ft, &steps));
    }
}

pub fn bias_terms(chain: &TruncatedChain, f: &PiecewiseFn, t_max: usize) -> Vec<BiasField> {
    let mut out = Vec::with_capacity(t_max + 1);
    scan_bias(chain, f, t_max, |_, b| out.push(b.clone()));
    out
}

/// `D^t_u(n)` for `t = 0..=t_max` at one state; `None` once truncation interferes.
pub fn bias_trace(chain: &TruncatedChain, f: &PiecewiseFn, n: &[i64], u: &Step, t_max: usize) -> Vec<Option<f64>> {
    let m: Vec<i64> = n.iter().zip(u.offsets()).map(|(&a, &b)| a + i64::from(b)).collect();
    let (Some(i), Some(j)) = (chain.index(n), chain.index(&m)) else {
        return vec![None; t_max + 1];
    };
    RewardIterates::new(chain, f)
        .take(t_max + 1)
        .enumerate()
        .map(|(t, ft)| (chain.is_exact(n, t) && chain.is_exact(&m, t)).then(|| ft[j] - ft[i]))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    pub truncation: i64,
    #[serde(skip)]
    pub pi: Vec<f64>,
    /// `sum_n pi(n) F(n)` over the box.
    pub value: f64,
    /// `|pi P - pi|_1` at termination.
    pub residual: f64,
    pub sweeps: usize,
}

const STATIONARY_RESIDUAL: f64 = 1e-12;
const MAX_SWEEPS: usize = 200_000;

/// Stationary law of the truncated chain by Gauss–Seidel sweeps on
/// `pi(m) (1 - P(m,m)) = sum_{n != m} pi(n) P(n, m)` for every state but
/// the origin.
pub fn stationary_truncated(chain: &TruncatedChain, f: &PiecewiseFn) -> Result<StationaryEstimate> {
    let len = chain.len();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); len];
    let mut diag = vec![0.0; len];
    for i in 0..len {
        for (j, p) in chain.row(i) {
            if i == j {
                diag[i] = p;
            } else {
                incoming[j].push((i, p));
            }
        }
    }
    if let Some(i) = (0..len).find(|&i| diag[i] >= 1.0) {
        return Err(Error::Oracle(format!(
            "state {:?} is absorbing in the truncated chain",
            chain.state(i)
        )));
    }
    // the origin is pinned, which makes the remaining system nonsingular
    let mut pi = vec![1.0 / len as f64; len];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        for m in 1..len {
            let s: f64 = incoming[m].iter().map(|&(n, p)| pi[n] * p).sum();
            pi[m] = s / (1.0 - diag[m]);
        }
        sweeps += 1;
        if sweeps % 10 == 0 {
            let total: f64 = pi.iter().sum();
            let normalized: Vec<f64> = pi.iter().map(|x| x / total).collect();
            let next = chain.push_forward(&normalized);
            residual = next.iter().zip(&normalized).map(|(a, b)| (a - b).abs()).sum();
            if residual <= STATIONARY_RESIDUAL {
                break;
            }
        }
    }
    if residual > STATIONARY_RESIDUAL {
        return Err(Error::Oracle(format!(
            "stationary solve stopped after {sweeps} sweeps with residual {residual:e}"
        )));
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    let value = chain.tabulate(f).iter().zip(&pi).map(|(a, b)| a * b).sum();
    Ok(StationaryEstimate {
        truncation: chain.truncation(),
        pi,
        value,
        residual,
        sweeps,
    })
}

/// Estimates at truncations `T` and `T + 10`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub coarse: StationaryEstimate,
    pub fine: StationaryEstimate,
}

impl TruncationCheck {
    pub fn difference(&self) -> f64 {
        (self.fine.value - self.coarse.value).abs()
    }

    pub fn value(&self) -> f64 {
        self.coarse.value
    }

    /// The coarse estimate, or an error carrying both when they differ by more than `tol`.
    pub fn require(&self, tol: f64) -> Result<f64> {
        if self.difference() < tol {
            Ok(self.coarse.value)
        } else {
            Err(Error::Oracle(format!(
                "estimates at T={} ({}) and T={} ({}) differ by more than {tol:e}",
                self.coarse.truncation, self.coarse.value, self.fine.truncation, self.fine.value
            )))
        }
    }
}

pub fn stationary_with_check(model: &RandomWalkModel, f: &PiecewiseFn, truncation: i64) -> Result<TruncationCheck> {
    let coarse = stationary_truncated(&TruncatedChain::new(model, truncation)?, f)?;
    let fine = stationary_truncated(&TruncatedChain::new(model, truncation + 10)?, f)?;
    Ok(TruncationCheck { coarse, fine })
}

/// Total-variation distance between `pi` on the box and `dist` on the
/// orthant; mass of `dist` outside the box counts fully.
pub fn tv_distance(chain: &TruncatedChain, pi: &[f64], dist: &ProductFormDistribution) -> Result<f64> {
    let mut inside = 0.0;
    let mut l1 = 0.0;
    for (n, &p) in chain.states().iter().zip(pi) {
        let q = dist.probability(&State::new(n.clone())?);
        inside += q;
        l1 += (p - q).abs();
    }
    Ok(0.5 * (l1 + (1.0 - inside).max(0.0)))
}

/// Partial sums `sum_{k <= K} |P^k(n, .) - P^k(n', .)|_mu` for `K = 0..=k_max`,
/// with `|h|_mu = sum_m |h(m)| mu(m)`.
pub fn mu_tv_norm(chain: &TruncatedChain, n: &[i64], n2: &[i64], k_max: usize, mu: &PiecewiseFn) -> Result<Vec<f64>> {
    let (i, j) = match (chain.index(n), chain.index(n2)) {
        (Some(i), Some(j)) => (i, j),
        _ => return Err(Error::Oracle(format!("states {n:?}, {n2:?} lie outside the box"))),
    };
    let weight = chain.tabulate(mu);
    if let Some(w) = weight.iter().find(|&&w| w < 1.0) {
        return Err(Error::Oracle(format!("weight function must be at least 1, found {w}")));
    }
    let mut h = vec![0.0; chain.len()];
    h[i] += 1.0;
    h[j] -= 1.0;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            h = chain.push_forward(&h);
        }
        total += h.iter().zip(&weight).map(|(a, w)| a.abs() * w).sum::<f64>();
        out.push(total);
    }
    Ok(out)
}

/// Largest gap between `D^t_u` obtained from the flow-decomposition
/// recursion seeded with `D^1` and the direct differences of iterates, over
/// `t <= t_max` and the states where both are available.
pub fn phi_recursion_gap(
    chain: &TruncatedChain,
    refinement: &Refinement,
    phi: &PhiTable,
    f: &PiecewiseFn,
    t_max: usize,
) -> f64 {
    let len = chain.len();
    let steps: Vec<Step> = {
        let mut s: Vec<Step> = phi.entries().iter().map(|e| e.u.clone()).collect();
        s.sort();
        s.dedup();
        s
    };
    let step_pos = |u: &Step| steps.iter().position(|v| v == u);
    let zs: Vec<usize> = chain.states().iter().map(|n| refinement.z(n)).collect();
    let shift = |i: usize, d: &[i64]| -> Option<usize> {
        let n = chain.state(i);
        let m: Vec<i64> = n.iter().zip(d).map(|(a, b)| a + b).collect();
        chain.index(&m)
    };
    let reward = |n: &[i64]| f.value_at(chain.model.component_of(n), n);
    // one-step reward differences, also seeding the recursion
    let base: Vec<Vec<Option<f64>>> = steps
        .iter()
        .map(|u| {
            (0..len)
                .map(|i| {
                    phi.get(zs[i], u)?;
                    let n = chain.state(i);
                    let m: Vec<i64> = n.iter().zip(u.as_i64()).map(|(a, b)| a + b).collect();
                    Some(reward(&m) - reward(n))
                })
                .collect()
        })
        .collect();
    let mut rec = base.clone();
    let mut worst: f64 = 0.0;
    for (t, ft) in RewardIterates::new(chain, f).take(t_max + 1).enumerate() {
        if t >= 1 {
            for (s, u) in steps.iter().enumerate() {
                for i in 0..len {
                    let (Some(r), Some(j)) = (rec[s][i], shift(i, &u.as_i64())) else { continue };
                    if chain.is_exact(chain.state(i), t) && chain.is_exact(chain.state(j), t) {
                        worst = worst.max((r - (ft[j] - ft[i])).abs());
                    }
                }
            }
        }
        if t == t_max {
            break;
        }
        if t >= 1 {
            let next: Vec<Vec<Option<f64>>> = steps
                .iter()
                .enumerate()
                .map(|(s, u)| {
                    (0..len)
                        .map(|i| {
                            let entry = phi.get(zs[i], u)?;
                            let mut acc = base[s][i]?;
                            for a in &entry.arcs {
                                let v = rec[step_pos(&a.v)?][shift(i, &a.d)?]?;
                                acc += a.weight * v;
                            }
                            Some(acc)
                        })
                        .collect()
                })
                .collect();
            rec = next;
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Non-negative when the check holds exactly.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub checks: Vec<Check>,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,margin,passed\n");
        for c in &self.checks {
            let _ = writeln!(s, "{},{:e},{}", c.name, c.margin, c.passed);
        }
        s
    }

    fn push(&mut self, name: &str, margin: f64, tol: f64) {
        self.checks.push(Check {
            name: name.into(),
            margin,
            passed: margin >= -tol,
        });
    }
}

/// Checks an optimal report against the truncated chain:
/// `certificate` re-evaluates the error rows and the sign conditions at
/// every state of the box, `envelope` tests `-A_u <= D^t_u <= B_u` for
/// `t <= t_max` wherever `D^t_u` is exact, and `bracket` compares the bound
/// with `oracle` when given.
pub fn validate_bounds(
    report: &BoundReport,
    instance: &Instance,
    chain: &TruncatedChain,
    t_max: usize,
    oracle: Option<f64>,
) -> Validation {
    let mut v = Validation::default();
    let (Some(cert), Some(bound)) = (&report.certificate, report.bound) else {
        v.push("optimal", f64::NEG_INFINITY, 0.0);
        return v;
    };
    let model = &instance.model;
    let f = &instance.reward;

    let mut cert_margin = -report.diagnostics.max_violation;
    for (idx, n) in chain.states().iter().enumerate() {
        let k = chain.component(idx);
        let g = cert.g.value_at(k, n);
        let fbar = cert.fbar.value_at(k, n);
        let fv = f.value_at(k, n);
        let mut worst = -g;
        // contributions of the step differences to the two error rows
        let (mut plus, mut minus) = (0.0, 0.0);
        for u in model.component(k).steps() {
            let delta = instance.perturbed.component(k).prob(u) - model.component(k).prob(u);
            if delta == 0.0 || u.is_zero() {
                continue;
            }
            let a = cert.envelope_a(u).and_then(|e| e.pieces[k].as_ref()).map(|p| p.value(n));
            let b = cert.envelope_b(u).and_then(|e| e.pieces[k].as_ref()).map(|p| p.value(n));
            let (Some(a), Some(b)) = (a, b) else {
                worst = f64::INFINITY;
                continue;
            };
            if delta > 0.0 {
                plus += delta * b;
                minus += delta * a;
            } else {
                plus += -delta * a;
                minus += -delta * b;
            }
        }
        let err_plus = fbar - fv + plus - g;
        let err_minus = fv - fbar + minus - g;
        worst = worst.max(match (report.kind, report.side) {
            (BoundKind::Bias, _) => err_plus.max(err_minus),
            (BoundKind::Comparison, Side::Upper) => err_minus,
            (BoundKind::Comparison, Side::Lower) => err_plus,
        });
        for e in cert.a.iter().chain(&cert.b) {
            if let Some(p) = &e.pieces[k] {
                worst = worst.max(-p.value(n));
            }
        }
        cert_margin = cert_margin.min(-worst);
    }
    v.push("certificate", cert_margin, crate::lp::CERTIFICATE_TOL);

    let mut env_margin = f64::INFINITY;
    scan_bias(chain, f, t_max, |_, field| {
        for (s, u) in field.steps.iter().enumerate() {
            let (Some(ea), Some(eb)) = (cert.envelope_a(u), cert.envelope_b(u)) else { continue };
            for (idx, d) in field.values[s].iter().enumerate() {
                let Some(d) = d else { continue };
                let k = chain.component(idx);
                let n = chain.state(idx);
                if let (Some(a), Some(b)) = (&ea.pieces[k], &eb.pieces[k]) {
                    env_margin = env_margin.min(b.value(n) - d).min(d + a.value(n));
                }
            }
        }
    });
    v.push("envelope", env_margin, VALIDATION_TOL);

    if let Some(o) = oracle {
        let margin = match report.side {
            Side::Upper => bound - o,
            Side::Lower => o - bound,
        };
        v.push("bracket", margin, VALIDATION_TOL);
    }
    v
}
