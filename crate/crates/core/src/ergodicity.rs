//! Drift conditions for walks with negative drift and the explicit
//! geometric bias bound that follows from them.
//!
//! [`GeometricLyapunov`] holds `V(n) = v_0 + sum_i v_i r_i^{n_i}` with its
//! drift data; [`MeynConstants`] turns it into the prefactor `C` of
//! `|D^t_u(n)| <= C (V(n) + V(n+u))`. [`QuadraticLyapunov`] holds
//! `V(n) = sum_i v_i n_i^2` for the weaker weighted drift condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::geometry::{BoxRegion, Step, UpperBound};
use crate::model::piecewise::PiecewiseFn;
use crate::model::product_form::ProductFormDistribution;
use crate::model::walk::RandomWalkModel;

/// Largest small set enumerated when computing `delta`.
const MAX_SMALL_SET: u128 = 20_000_000;

/// Per-dimension `inf_{n: i in I(n)} s-_i(n) / s+_i(n)`; infinite when no
/// component moves up in dimension `i` while it is positive.
pub fn ratio_limits(model: &RandomWalkModel) -> Vec<f64> {
    (0..model.dim())
        .map(|i| {
            model
                .components()
                .iter()
                .filter(|c| c.positive_in(i))
                .map(|c| {
                    let (plus, _, minus) = c.partial_sums(i);
                    if plus > 0.0 { minus / plus } else { f64::INFINITY }
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `eps_* = min_{k, i in I} s+_i (1 - r_i) + s-_i (1 - 1/r_i)`.
pub fn drift_margin(model: &RandomWalkModel, r: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for c in model.components() {
        for (i, &ri) in r.iter().enumerate() {
            if c.positive_in(i) {
                let (plus, _, minus) = c.partial_sums(i);
                best = best.min(plus * (1.0 - ri) + minus * (1.0 - 1.0 / ri));
            }
        }
    }
    best
}

fn require_negative_drift(model: &RandomWalkModel) -> Result<Vec<f64>> {
    let drift = model.drift();
    match drift.sup.iter().enumerate().find(|(_, s)| **s >= 0.0) {
        Some((dim, &sup)) => Err(Error::NoNegativeDrift { dim, sup }),
        None => Ok(drift.sup),
    }
}

/// Default ratios: geometric midpoint of `(1, limit)`, with the limit capped at `e`.
pub fn default_ratios(model: &RandomWalkModel) -> Vec<f64> {
    ratio_limits(model)
        .into_iter()
        .map(|l| l.min(std::f64::consts::E).sqrt())
        .collect()
}

/// Box `{n : n_i <= upper_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallSet {
    pub upper: Vec<i64>,
}

impl SmallSet {
    pub fn contains(&self, n: &[i64]) -> bool {
        n.iter().zip(&self.upper).all(|(x, u)| x <= u)
    }

    pub fn region(&self) -> BoxRegion {
        let upper = self.upper.iter().map(|&u| UpperBound::Finite(u)).collect();
        BoxRegion::new(vec![0; self.upper.len()], upper).expect("non-negative bounds")
    }

    fn cardinality(&self) -> u128 {
        self.upper.iter().map(|&u| u as u128 + 1).product()
    }

    fn states(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let total = self.cardinality();
        (0..total).map(move |mut idx| {
            let mut n = vec![0i64; self.upper.len()];
            for (x, &u) in n.iter_mut().zip(&self.upper).rev() {
                let side = u as u128 + 1;
                *x = (idx % side) as i64;
                idx /= side;
            }
            n
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricLyapunov {
    pub v0: f64,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
    pub eps: f64,
    pub eps_star: f64,
    pub b: f64,
    pub small: SmallSet,
}

impl GeometricLyapunov {
    /// Drift data for arbitrary weights `v0 >= 1`, `v_i > 0`.
    pub fn with_weights(model: &RandomWalkModel, v0: f64, v: Vec<f64>, r: Vec<f64>, eps: f64) -> Result<Self> {
        require_negative_drift(model)?;
        let dim = model.dim();
        if v.len() != dim || r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len().min(r.len()),
            });
        }
        if v0 < 1.0 || v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::OutOfRange(format!("weights v0 = {v0}, v = {v:?}")));
        }
        for (i, (&ri, limit)) in r.iter().zip(ratio_limits(model)).enumerate() {
            if !(ri > 1.0 && ri < limit) {
                return Err(Error::OutOfRange(format!(
                    "r_{} = {ri} must lie in (1, {limit})",
                    i + 1
                )));
            }
        }
        let eps_star = drift_margin(model, &r);
        if !(eps > 0.0 && eps < eps_star) {
            return Err(Error::OutOfRange(format!("eps = {eps} must lie in (0, {eps_star})")));
        }
        let sup_plus: Vec<f64> = (0..dim)
            .map(|i| {
                model
                    .components()
                    .iter()
                    .map(|c| c.partial_sums(i).0)
                    .fold(0.0, f64::max)
            })
            .collect();
        let b = eps * v0
            + (0..dim)
                .map(|i| v[i] * (sup_plus[i] * (r[i] - 1.0) + eps))
                .sum::<f64>();
        let upper = (0..dim)
            .map(|i| {
                let x = ((b / v[i]).ln() - (eps_star - eps).ln()) / r[i].ln();
                x.max(1.0).ceil() as i64
            })
            .collect();
        Ok(Self {
            v0,
            v,
            r,
            eps,
            eps_star,
            b,
            small: SmallSet { upper },
        })
    }

    /// Weights dominating a C-linear reward: `v0 = max_k {f_k0, 1}` and
    /// `v_i = max_k {f_ki, 1} / (log r_i r_i^{log r_i})`. Fails unless
    /// `|F| <= V` holds on a check box.
    pub fn for_reward(model: &RandomWalkModel, f: &PiecewiseFn, r: Vec<f64>, eps: f64) -> Result<Self> {
        if !f.is_c_linear() {
            return Err(Error::InvalidFunction("reward must be affine on every component".into()));
        }
        let v0 = f.pieces().iter().map(|p| p.constant).fold(1.0, f64::max);
        let v = r
            .iter()
            .enumerate()
            .map(|(i, &ri)| {
                let fi = f.pieces().iter().map(|p| p.linear[i]).fold(1.0, f64::max);
                fi / (ri.ln() * ri.powf(ri.ln()))
            })
            .collect();
        let lyap = Self::with_weights(model, v0, v, r, eps)?;
        let dominated = check_box(model.dim(), 40).all(|n| {
            let k = model.component_of(&n);
            f.value_at(k, &n).abs() <= lyap.value(&n) * (1.0 + 1e-12)
        });
        if !dominated {
            return Err(Error::OutOfRange("reward is not dominated by V; choose smaller ratios".into()));
        }
        Ok(lyap)
    }

    /// [`GeometricLyapunov::for_reward`] with default ratios and `eps = eps_* / 2`.
    pub fn for_reward_default(model: &RandomWalkModel, f: &PiecewiseFn) -> Result<Self> {
        require_negative_drift(model)?;
        let r = default_ratios(model);
        let eps = drift_margin(model, &r) / 2.0;
        Self::for_reward(model, f, r, eps)
    }

    pub fn value(&self, n: &[i64]) -> f64 {
        self.v0
            + n.iter()
                .zip(self.v.iter().zip(&self.r))
                .map(|(&x, (v, r))| v * r.powi(x as i32))
                .sum::<f64>()
    }

    /// Largest drift slack on `{0..size}^M`; non-positive for valid data.
    pub fn drift_slack(&self, model: &RandomWalkModel, size: i64) -> f64 {
        drift_inequality_check(
            model,
            |n| self.value(n),
            self.eps,
            self.b,
            |n| self.small.contains(n),
            size,
        )
    }

    /// `sum_n pi(n) V(n + u)` restricted to the component `k`, in closed
    /// form; infinite when `rho_i r_i >= 1`.
    fn shifted_mean(&self, model: &RandomWalkModel, dist: &ProductFormDistribution, k: usize, u: &Step) -> f64 {
        let mut total = 0.0;
        for b in model.component(k).boxes() {
            total += self.v0 * dist.box_moment(b, None, None);
            for i in 0..self.v.len() {
                let m = dist.box_moment(b, None, Some((i, self.r[i])));
                total += self.v[i] * self.r[i].powi(i32::from(u.get(i))) * m;
            }
        }
        total
    }
}

fn check_box(dim: usize, size: i64) -> impl Iterator<Item = Vec<i64>> {
    SmallSet { upper: vec![size; dim] }.states().collect::<Vec<_>>().into_iter()
}

/// `max_n sum_u p(n,u) V(n+u) - V(n) + eps V(n) - b 1_B(n)` over `{0..size}^M`.
pub fn drift_inequality_check(
    model: &RandomWalkModel,
    v: impl Fn(&[i64]) -> f64,
    eps: f64,
    b: f64,
    small: impl Fn(&[i64]) -> bool,
    size: i64,
) -> f64 {
    check_box(model.dim(), size)
        .map(|n| {
            let vn = v(&n);
            let pv = expected_next(model, &n, &v);
            pv - vn + eps * vn - if small(&n) { b } else { 0.0 }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn expected_next(model: &RandomWalkModel, n: &[i64], v: &impl Fn(&[i64]) -> f64) -> f64 {
    model
        .component(model.component_of(n))
        .transitions()
        .map(|(u, p)| {
            let m: Vec<i64> = n.iter().zip(u.offsets()).map(|(&a, &b)| a + i64::from(b)).collect();
            p * v(&m)
        })
        .sum()
}

/// Which expression stands for `v_B`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallSetBound {
    /// `v_0 + M b / (eps_* - eps)`.
    #[default]
    Explicit,
    /// `max_{n in B} V(n)`.
    Maximum,
}

/// Constants of the geometric ergodicity bound. The free parameter
/// `rho_c in (theta, 1)` is carried as `s = (1 - rho_c) M_B in (0, 1)`,
/// because `theta = 1 - 1/M_B` is often indistinguishable from 1 in
/// double precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeynConstants {
    pub delta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub b_hat: f64,
    pub v_b: f64,
    pub eta: f64,
    pub m_b: f64,
    pub theta: f64,
    /// Position of `rho_c` inside `(theta, 1)`.
    pub s: f64,
    pub rho: f64,
    pub prefactor: f64,
}

/// `delta = min_{n in B} sum_{u: n+u in B} p(n, u)`.
pub fn small_set_delta(model: &RandomWalkModel, small: &SmallSet) -> Result<f64> {
    if small.cardinality() > MAX_SMALL_SET {
        return Err(Error::OutOfRange(format!(
            "small set with {} states is too large to enumerate",
            small.cardinality()
        )));
    }
    Ok(small
        .states()
        .map(|n| {
            model
                .component(model.component_of(&n))
                .transitions()
                .filter(|(u, _)| {
                    let m: Vec<i64> = n.iter().zip(u.offsets()).map(|(&a, &b)| a + i64::from(b)).collect();
                    small.contains(&m)
                })
                .map(|(_, p)| p)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min))
}

impl MeynConstants {
    /// Constants for `rho_c = 1 - s / M_B`; `s = 1/2` gives `rho_c = (1 + theta) / 2`.
    pub fn new(lyap: &GeometricLyapunov, model: &RandomWalkModel, s: f64, vb: SmallSetBound) -> Result<Self> {
        let delta = small_set_delta(model, &lyap.small)?;
        if delta <= 0.0 {
            return Err(Error::OutOfRange("delta vanishes on the small set".into()));
        }
        let v_b = match vb {
            SmallSetBound::Explicit => lyap.v0 + lyap.v.len() as f64 * lyap.b / (lyap.eps_star - lyap.eps),
            SmallSetBound::Maximum => lyap.value(&lyap.small.upper),
        };
        Self::from_parts(delta, lyap.eps, lyap.b, v_b, s)
    }

    fn from_parts(delta: f64, eps: f64, b: f64, v_b: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::OutOfRange(format!(
                "rho_c must lie strictly between theta and 1 (position {s})"
            )));
        }
        let gamma = (4.0 * b + 2.0 * delta * (1.0 - eps) * v_b) / (delta * delta);
        let lambda = (1.0 - eps + gamma) / (1.0 + gamma);
        let b_hat = v_b + gamma;
        let eta = (4.0 - delta * delta) * b * b / (delta.powi(5) * eps * eps);
        // 1 - lambda = eps / (1 + gamma), computed without cancellation
        let gap = eps / (1.0 + gamma);
        let m_b = (gap + b_hat + b_hat * b_hat + eta * (b_hat * gap + b_hat * b_hat)) / (gap * gap);
        let theta = 1.0 - 1.0 / m_b;
        let rho = 1.0 - s / m_b;
        // (1 - rho) = s / M_B and (rho - theta) = (1 - s) / M_B
        let prefactor = (1.0 + gamma) * rho * m_b * m_b / (s * (1.0 - s));
        Ok(Self {
            delta,
            gamma,
            lambda,
            b_hat,
            v_b,
            eta,
            m_b,
            theta,
            s,
            rho,
            prefactor,
        })
    }

    /// Same constants with `rho_c` moved to position `s`.
    pub fn with_position(&self, s: f64, eps: f64, b: f64) -> Result<Self> {
        Self::from_parts(self.delta, eps, b, self.v_b, s)
    }

    /// Smallest prefactor over `rho_c in (theta, 1)`, by golden-section search on `s`.
    pub fn minimize_position(lyap: &GeometricLyapunov, model: &RandomWalkModel, vb: SmallSetBound) -> Result<Self> {
        let base = Self::new(lyap, model, 0.5, vb)?;
        let f = |s: f64| base.with_position(s, lyap.eps, lyap.b).map(|c| c.prefactor).unwrap_or(f64::INFINITY);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
        for _ in 0..100 {
            let a = hi - phi * (hi - lo);
            let c = lo + phi * (hi - lo);
            if f(a) <= f(c) {
                hi = c;
            } else {
                lo = a;
            }
        }
        base.with_position(0.5 * (lo + hi), lyap.eps, lyap.b)
    }
}

/// `C (V(n) + V(n + u))`, uniform in `t`.
pub fn geometric_bias_bound(consts: &MeynConstants, lyap: &GeometricLyapunov, n: &[i64], u: &Step) -> f64 {
    let m: Vec<i64> = n.iter().zip(u.offsets()).map(|(&a, &b)| a + i64::from(b)).collect();
    consts.prefactor * (lyap.value(n) + lyap.value(&m))
}

/// Error bound `sum_n pi(n) G(n)` with `G(n) = sum_u |pbar - p| C (V(n) + V(n+u))`,
/// i.e. the width of the bracket around the perturbed mean when the bias
/// terms are replaced by the geometric bound.
pub fn geometric_error_bound(
    consts: &MeynConstants,
    lyap: &GeometricLyapunov,
    model: &RandomWalkModel,
    perturbed: &RandomWalkModel,
    dist: &ProductFormDistribution,
) -> f64 {
    let mut total = 0.0;
    for (k, c) in model.components().iter().enumerate() {
        for u in c.steps() {
            let delta = (perturbed.component(k).prob(u) - c.prob(u)).abs();
            if delta == 0.0 || u.is_zero() {
                continue;
            }
            let zero = Step::zero(model.dim());
            let mean = lyap.shifted_mean(model, dist, k, &zero) + lyap.shifted_mean(model, dist, k, u);
            total += delta * consts.prefactor * mean;
        }
    }
    total
}

/// Quadratic Lyapunov function `V(n) = sum_i v_i n_i^2` with
/// `v_i = -mu_* / sup_{i in I(n)} (s+_i - s-_i)`, for the weight
/// `mu(n) = mu_0 + sum_i mu_i n_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticLyapunov {
    pub v: Vec<f64>,
    /// `mu_*`, which is `f^*` when built from a reward.
    pub f_star: f64,
    pub mu0: f64,
    pub b: f64,
    /// `None` encodes the empty set.
    pub small: Option<SmallSet>,
}

impl QuadraticLyapunov {
    /// Construction for a weight with `mu_0 >= 1`, `mu_i >= 0`.
    pub fn for_weight(model: &RandomWalkModel, mu0: f64, mu: &[f64]) -> Result<Self> {
        let sup = require_negative_drift(model)?;
        if mu0 < 1.0 || mu.iter().any(|&m| m < 0.0) || mu.len() != model.dim() {
            return Err(Error::OutOfRange(format!("weight mu_0 = {mu0}, mu = {mu:?}")));
        }
        let f_star = mu.iter().copied().fold(mu0, f64::max);
        let v: Vec<f64> = sup.iter().map(|s| -f_star / s).collect();
        let b = mu0 + v.iter().sum::<f64>();
        let bound = (b / f_star).floor() as i64;
        Ok(Self {
            small: Some(SmallSet {
                upper: vec![bound; model.dim()],
            }),
            v,
            f_star,
            mu0,
            b,
        })
    }

    /// Construction for a C-linear reward through the weight
    /// `mu(n) = max(1, max_k |f_k0|) + sum_i max_k |f_ki| n_i`.
    pub fn for_reward(model: &RandomWalkModel, f: &PiecewiseFn) -> Result<Self> {
        if !f.is_c_linear() {
            return Err(Error::InvalidFunction("reward must be affine on every component".into()));
        }
        let (mu0, mu) = reward_weight(f);
        Self::for_weight(model, mu0, &mu)
    }

    pub fn value(&self, n: &[i64]) -> f64 {
        n.iter().zip(&self.v).map(|(&x, v)| v * (x * x) as f64).sum()
    }

    pub fn in_small_set(&self, n: &[i64]) -> bool {
        self.small.as_ref().is_some_and(|s| s.contains(n))
    }
}

/// Coefficients `(mu_0, mu_i)` of the weight dominating `|F|`.
pub fn reward_weight(f: &PiecewiseFn) -> (f64, Vec<f64>) {
    let mu0 = f.pieces().iter().map(|p| p.constant.abs()).fold(1.0, f64::max);
    let mu = (0..f.dim())
        .map(|i| f.pieces().iter().map(|p| p.linear[i].abs()).fold(0.0, f64::max))
        .collect();
    (mu0, mu)
}

/// `max_n sum_u p(n,u) V(n+u) - V(n) + mu(n) - b 1_B(n)` over `{0..size}^M`.
pub fn mu_drift_check(model: &RandomWalkModel, q: &QuadraticLyapunov, mu: &PiecewiseFn, size: i64) -> f64 {
    let v = |n: &[i64]| q.value(n);
    check_box(model.dim(), size)
        .map(|n| {
            let k = model.component_of(&n);
            expected_next(model, &n, &v) - v(&n) + mu.value_at(k, &n) - if q.in_small_set(&n) { q.b } else { 0.0 }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One point of a prefactor sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricPoint {
    pub r: Vec<f64>,
    pub eps: f64,
    pub s: f64,
    pub prefactor: f64,
    pub error_bound: f64,
}

/// Grid over ratios (`ratio_points` per dimension, strictly inside the
/// admissible range), `eps` as fractions of `eps_*`, and positions of
/// `rho_c`. Points where the construction fails are skipped.
pub fn geometric_sweep(
    model: &RandomWalkModel,
    perturbed: &RandomWalkModel,
    f: &PiecewiseFn,
    dist: &ProductFormDistribution,
    ratio_points: usize,
    eps_fractions: &[f64],
    positions: &[f64],
) -> Result<Vec<GeometricPoint>> {
    use rayon::prelude::*;
    require_negative_drift(model)?;
    let limits: Vec<f64> = ratio_limits(model).into_iter().map(|l| l.min(std::f64::consts::E)).collect();
    let axes: Vec<Vec<f64>> = limits
        .iter()
        .map(|&l| (1..=ratio_points).map(|a| 1.0 + (l - 1.0) * a as f64 / (ratio_points + 1) as f64).collect())
        .collect();
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        grid = grid
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&x| [p.clone(), vec![x]].concat()))
            .collect();
    }
    let points: Vec<Vec<GeometricPoint>> = grid
        .par_iter()
        .map(|r| {
            let mut out = Vec::new();
            let eps_star = drift_margin(model, r);
            for &frac in eps_fractions {
                let Ok(lyap) = GeometricLyapunov::for_reward(model, f, r.clone(), frac * eps_star) else {
                    continue;
                };
                let Ok(base) = MeynConstants::new(&lyap, model, 0.5, SmallSetBound::Explicit) else {
                    continue;
                };
                for &s in positions {
                    if let Ok(c) = base.with_position(s, lyap.eps, lyap.b) {
                        out.push(GeometricPoint {
                            r: r.clone(),
                            eps: lyap.eps,
                            s,
                            prefactor: c.prefactor,
                            error_bound: geometric_error_bound(&c, &lyap, model, perturbed, dist),
                        });
                    }
                }
            }
            out
        })
        .collect();
    Ok(points.into_iter().flatten().collect())
}
