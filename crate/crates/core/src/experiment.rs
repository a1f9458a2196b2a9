//! Parameter sweeps over the tandem families and CSV output.
//!
//! Every sweep produces one [`SweepRow`] per grid value. Columns of the CSV
//! (in order): `x`, `q_lower`, `q_upper`, `c_bound`, `c_side`, `l_lower`,
//! `l_upper`, `oracle`, `oracle_gap`, `q_lower_status`, `q_upper_status`,
//! `c_status`, `l_lower_status`, `l_upper_status`, `oracle_status`,
//! `validation`. Bound cells are empty when the method was not requested or
//! the program was not optimal. A failed program or oracle is recorded as a
//! status and does not stop the sweep.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias_lp::{comparison_bound, solve_lp, BiasContext, BiasLpOptions, BoundReport, Side, StepSelection};
use crate::ergodicity::{geometric_sweep, GeometricPoint};
use crate::error::{Error, Result};
use crate::families::{tandem2, tandem3, Instance, Tandem2, Tandem3};
use crate::lp::DenseSimplex;
use crate::model::config::ModelFile;
use crate::model::piecewise::{Degree, PiecewiseFn};
use crate::oracle::{stationary_with_check, validate_bounds, TruncatedChain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Two-node tandem over the load `lambda / mu1` at fixed `eta`.
    Tandem2,
    /// Two-node tandem over `eta = mu1_star / mu1` at fixed load.
    Tandem2Eta,
    /// Three-node tandem over the load `lambda / mu`.
    Tandem3,
    /// Prefactor grid of the geometric bias bound for the two-node tandem.
    Geometric,
    /// Instance read from `model`; grid values only label the rows.
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Geometric,
    LpLinear,
    LpQuadratic,
    Comparison,
    Oracle,
}

fn default_eta() -> f64 {
    2.0
}

fn default_load() -> f64 {
    0.8
}

fn default_t_max() -> usize {
    200
}

fn default_reward() -> usize {
    1
}

fn default_steps() -> Vec<StepSelection> {
    vec![StepSelection::All]
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<StepSelection>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Steps {
        One(StepSelection),
        Many(Vec<StepSelection>),
    }
    Ok(match Steps::deserialize(d)? {
        Steps::One(s) => vec![s],
        Steps::Many(v) => v,
    })
}

fn default_ratio_points() -> usize {
    8
}

fn default_eps_fractions() -> Vec<f64> {
    vec![0.1, 0.3, 0.5, 0.7]
}

fn default_positions() -> Vec<f64> {
    vec![0.25, 0.5]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: SweepKind,
    /// Model file for the `model` kind, relative to the config file. Its own
    /// reward is used and `reward` is ignored.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Values of the swept parameter.
    pub grid: Vec<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Load used by the `eta` sweep and by the geometric grid.
    #[serde(default = "default_load")]
    pub load: f64,
    /// The reward is `F(n) = n_i` for this 1-based coordinate.
    #[serde(default = "default_reward")]
    pub reward: usize,
    pub methods: Vec<Method>,
    /// One step set or a list; every bound column keeps the tightest
    /// certified value over the list.
    #[serde(default = "default_steps", deserialize_with = "one_or_many")]
    pub steps: Vec<StepSelection>,
    /// Oracle truncation; 60 in two dimensions and 25 in three by default.
    #[serde(default)]
    pub truncation: Option<i64>,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_ratio_points")]
    pub ratio_points: usize,
    #[serde(default = "default_eps_fractions")]
    pub eps_fractions: Vec<f64>,
    #[serde(default = "default_positions")]
    pub positions: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(m), Some(dir)) = (&c.model, path.parent()) {
            if m.is_relative() {
                c.model = Some(dir.join(m));
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.steps.is_empty() {
            return Err(Error::Config("no step sets selected".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if (self.kind == SweepKind::Model) != self.model.is_some() {
            return Err(Error::Config("`model` is required for, and only allowed with, kind = \"model\"".into()));
        }
        let allowed: &[Method] = match self.kind {
            SweepKind::Geometric => &[Method::Geometric],
            _ => &[Method::LpLinear, Method::LpQuadratic, Method::Comparison, Method::Oracle],
        };
        if let Some(m) = self.methods.iter().find(|m| !allowed.contains(m)) {
            return Err(Error::Config(format!("method {m:?} is not available for {:?}", self.kind)));
        }
        Ok(())
    }

    fn default_truncation(dim: usize) -> i64 {
        if dim >= 3 { 25 } else { 60 }
    }

    /// Instance at grid value `x`.
    pub fn instance(&self, x: f64) -> Result<Instance> {
        if let Some(path) = &self.model {
            return instance_from_file(path);
        }
        let mut inst = match self.kind {
            SweepKind::Model => unreachable!("validated"),
            SweepKind::Tandem2 => tandem2(&Tandem2::from_load(x, self.eta))?,
            SweepKind::Tandem2Eta => tandem2(&Tandem2::from_load(self.load, x))?,
            SweepKind::Geometric => tandem2(&Tandem2::from_load(self.load, self.eta))?,
            SweepKind::Tandem3 => tandem3(&Tandem3::from_load(x))?,
        };
        let dim = inst.model.dim();
        if self.reward == 0 || self.reward > dim {
            return Err(Error::Config(format!("reward coordinate {} out of range", self.reward)));
        }
        inst.reward = PiecewiseFn::coordinate(inst.model.num_components(), dim, self.reward - 1);
        Ok(inst)
    }

    fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

/// Status and value of one bound.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub status: String,
    pub bound: Option<f64>,
}

impl Cell {
    fn from_report(r: &BoundReport) -> Self {
        Self {
            status: format!("{:?}", r.status).to_lowercase(),
            bound: r.bound,
        }
    }

    fn error(e: &Error) -> Self {
        Self {
            status: match e {
                Error::Numerical(_) => "numerical".into(),
                _ => "error".into(),
            },
            bound: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub q_lower: Option<Cell>,
    pub q_upper: Option<Cell>,
    pub comparison: Option<Cell>,
    /// `upper`, `lower` or `both`.
    pub c_side: Option<String>,
    pub l_lower: Option<Cell>,
    pub l_upper: Option<Cell>,
    pub oracle: Option<f64>,
    /// Change of the oracle value when the truncation grows by 10.
    pub oracle_gap: Option<f64>,
    /// `converged` or the failure kind.
    pub oracle_status: Option<String>,
    /// `passed`, `failed` or `unvalidated`.
    pub validation: String,
}

pub const CSV_HEADER: [&str; 16] = [
    "x",
    "q_lower",
    "q_upper",
    "c_bound",
    "c_side",
    "l_lower",
    "l_upper",
    "oracle",
    "oracle_gap",
    "q_lower_status",
    "q_upper_status",
    "c_status",
    "l_lower_status",
    "l_upper_status",
    "oracle_status",
    "validation",
];

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        let bound = |c: &Option<Cell>| num(c.as_ref().and_then(|c| c.bound));
        let status = |c: &Option<Cell>| c.as_ref().map(|c| c.status.clone()).unwrap_or_default();
        vec![
            format!("{}", self.x),
            bound(&self.q_lower),
            bound(&self.q_upper),
            bound(&self.comparison),
            self.c_side.clone().unwrap_or_default(),
            bound(&self.l_lower),
            bound(&self.l_upper),
            num(self.oracle),
            self.oracle_gap.map(|x| format!("{x:e}")).unwrap_or_default(),
            status(&self.q_lower),
            status(&self.q_upper),
            status(&self.comparison),
            status(&self.l_lower),
            status(&self.l_upper),
            self.oracle_status.clone().unwrap_or_default(),
            self.validation.clone(),
        ]
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.record()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Bounds for one instance. Optimal reports are validated against the
/// oracle when it is requested.
pub fn evaluate_point(config: &ExperimentConfig, x: f64) -> Result<SweepRow> {
    let inst = config.instance(x)?;
    evaluate_instance(config, &inst, x)
}

pub fn evaluate_instance(config: &ExperimentConfig, inst: &Instance, x: f64) -> Result<SweepRow> {
    let mut row = SweepRow {
        x,
        validation: "unvalidated".into(),
        ..Default::default()
    };
    let contexts: Vec<Result<BiasContext<'_>>> = config
        .steps
        .iter()
        .map(|&steps| BiasContext::new(inst, BiasLpOptions { steps, reach: 1 }))
        .collect();
    let solver = DenseSimplex::default();
    let mut reports: Vec<BoundReport> = Vec::new();
    // tightest optimal bound over the step sets
    let mut best = |side: Side, solve: &dyn Fn(&BiasContext<'_>) -> Result<BoundReport>| -> Cell {
        let mut cell: Option<Cell> = None;
        for ctx in &contexts {
            let next = match ctx.as_ref().map_err(|e| Error::Refinement(e.to_string())).and_then(solve) {
                Ok(r) => {
                    let c = Cell::from_report(&r);
                    if r.is_optimal() {
                        reports.push(r);
                    }
                    c
                }
                Err(e) => Cell::error(&e),
            };
            cell = Some(match cell {
                Some(old) if tighter(side, &old, &next) => old,
                _ => next,
            });
        }
        cell.expect("at least one step set")
    };
    if config.has(Method::LpQuadratic) {
        row.q_lower = Some(best(Side::Lower, &|c| solve_lp(&c.assemble(Side::Lower, Degree::Quadratic)?, &solver)));
        row.q_upper = Some(best(Side::Upper, &|c| solve_lp(&c.assemble(Side::Upper, Degree::Quadratic)?, &solver)));
    }
    if config.has(Method::LpLinear) {
        row.l_lower = Some(best(Side::Lower, &|c| solve_lp(&c.assemble(Side::Lower, Degree::Linear)?, &solver)));
        row.l_upper = Some(best(Side::Upper, &|c| solve_lp(&c.assemble(Side::Upper, Degree::Linear)?, &solver)));
    }
    if config.has(Method::Comparison) {
        // F-bar = F is the comparison result proper; a searched F-bar only as fallback
        let fixed = |c: &BiasContext<'_>, side| solve_lp(&c.assemble_comparison(side, Degree::Quadratic, true)?, &solver);
        let mut upper = best(Side::Upper, &|c| fixed(c, Side::Upper));
        let mut lower = best(Side::Lower, &|c| fixed(c, Side::Lower));
        if upper.bound.is_none() && lower.bound.is_none() {
            upper = best(Side::Upper, &|c| comparison_bound(c, Side::Upper, Degree::Quadratic));
            lower = best(Side::Lower, &|c| comparison_bound(c, Side::Lower, Degree::Quadratic));
        }
        let (side, cell) = match (upper.bound.is_some(), lower.bound.is_some()) {
            (true, true) => (Some("both"), upper),
            (true, false) => (Some("upper"), upper),
            (false, true) => (Some("lower"), lower),
            (false, false) => (None, upper),
        };
        row.c_side = side.map(String::from);
        row.comparison = Some(cell);
    }
    if config.has(Method::Oracle) {
        let truncation = config.truncation.unwrap_or(ExperimentConfig::default_truncation(inst.model.dim()));
        let check = match stationary_with_check(&inst.model, &inst.reward, truncation) {
            Ok(c) => c,
            Err(e) => {
                row.oracle_status = Some(Cell::error(&e).status);
                return Ok(row);
            }
        };
        let value = check.value();
        row.oracle = Some(value);
        row.oracle_gap = Some(check.difference());
        row.oracle_status = Some("converged".into());
        let chain = TruncatedChain::new(&inst.model, truncation)?;
        let ok = reports
            .iter()
            .all(|r| validate_bounds(r, inst, &chain, config.t_max, Some(value)).passed());
        row.validation = if ok { "passed" } else { "failed" }.into();
    }
    Ok(row)
}

/// Whether `old` is at least as good as `new` on this side.
fn tighter(side: Side, old: &Cell, new: &Cell) -> bool {
    match (old.bound, new.bound) {
        (Some(a), Some(b)) => match side {
            Side::Upper => a <= b,
            Side::Lower => a >= b,
        },
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => true,
    }
}

/// Rows in grid order; points are evaluated in parallel.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if config.kind == SweepKind::Geometric {
        return Err(Error::Config("use run_geometric_constants for geometric sweeps".into()));
    }
    config.grid.par_iter().map(|&x| evaluate_point(config, x)).collect()
}

pub fn run_tandem2_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    expect_kind(config, SweepKind::Tandem2)?;
    run_sweep(config)
}

pub fn run_tandem2_eta_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    expect_kind(config, SweepKind::Tandem2Eta)?;
    run_sweep(config)
}

pub fn run_tandem3_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    expect_kind(config, SweepKind::Tandem3)?;
    run_sweep(config)
}

fn expect_kind(config: &ExperimentConfig, kind: SweepKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::Config(format!("expected a {kind:?} configuration, got {:?}", config.kind)));
    }
    Ok(())
}

/// Loads at which the linear program is infeasible while the quadratic one is optimal.
pub fn feasibility_frontier(rows: &[SweepRow]) -> Vec<f64> {
    let optimal = |c: &Option<Cell>| c.as_ref().is_some_and(|c| c.status == "optimal");
    let infeasible = |c: &Option<Cell>| c.as_ref().is_some_and(|c| c.status == "infeasible");
    rows.iter()
        .filter(|r| optimal(&r.q_lower) && optimal(&r.q_upper) && (infeasible(&r.l_lower) || infeasible(&r.l_upper)))
        .map(|r| r.x)
        .collect()
}

/// Summary of a geometric prefactor sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricReport {
    pub points: Vec<GeometricPoint>,
    pub min_prefactor: f64,
    pub min_error_bound: f64,
}

impl GeometricReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(e.to_string());
        let dim = self.points.first().map_or(0, |p| p.r.len());
        let mut header: Vec<String> = (1..=dim).map(|i| format!("r{i}")).collect();
        header.extend(["eps", "s", "prefactor", "error_bound"].map(String::from));
        w.write_record(&header).map_err(io)?;
        for p in &self.points {
            let mut rec: Vec<String> = p.r.iter().map(|x| x.to_string()).collect();
            rec.extend([p.eps, p.s, p.prefactor, p.error_bound].map(|x| format!("{x:e}")));
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Prefactor grid for the two-node tandem at the configured load and `eta`.
pub fn run_geometric_constants(config: &ExperimentConfig) -> Result<GeometricReport> {
    expect_kind(config, SweepKind::Geometric)?;
    let inst = config.instance(config.load)?;
    let points = geometric_sweep(
        &inst.model,
        &inst.perturbed,
        &inst.reward,
        &inst.stationary,
        config.ratio_points,
        &config.eps_fractions,
        &config.positions,
    )?;
    if points.is_empty() {
        return Err(Error::OutOfRange("no admissible grid point".into()));
    }
    let min_prefactor = points.iter().map(|p| p.prefactor).fold(f64::INFINITY, f64::min);
    let min_error_bound = points.iter().map(|p| p.error_bound).fold(f64::INFINITY, f64::min);
    Ok(GeometricReport {
        points,
        min_prefactor,
        min_error_bound,
    })
}

/// Instance described by a model file.
pub fn instance_from_file(path: &Path) -> Result<Instance> {
    ModelFile::load(path)?.instance()
}
