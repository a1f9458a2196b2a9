use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rwbounds::bias_lp::{comparison_bound, solve_lp, BiasContext, BiasLpOptions, BoundReport, Side, StepSelection};
use rwbounds::ergodicity::{
    default_ratios, drift_margin, geometric_error_bound, mu_drift_check, ratio_limits, GeometricLyapunov, MeynConstants,
    QuadraticLyapunov, SmallSetBound,
};
use rwbounds::experiment::{
    feasibility_frontier, instance_from_file, rows_to_csv, run_geometric_constants, run_sweep, ExperimentConfig,
    SweepKind,
};
use rwbounds::families::{tandem2, tandem3, Instance, Tandem2, Tandem3};
use rwbounds::lp::mps::to_mps;
use rwbounds::lp::DenseSimplex;
use rwbounds::model::{Degree, PiecewiseFn};
use rwbounds::oracle::{stationary_with_check, validate_bounds, TruncatedChain};

#[derive(Parser)]
#[command(name = "rwbounds", version, about = "Certified bounds on stationary rewards of random walks in the orthant")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drift data and Lyapunov weights of the walk.
    CheckDrift(ModelArgs),
    /// Explicit geometric bias bound and the resulting error bound.
    GeoBound(GeoArgs),
    /// Upper and/or lower bound from the bias linear program.
    LpBound(LpArgs),
    /// One-sided bound by the perturbed mean.
    Compare(CompareArgs),
    /// Stationary mean on a truncated state space.
    Oracle(OracleArgs),
    /// Run an experiment configuration and write CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Tandem2,
    Tandem3,
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (TOML); overrides --family.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tandem2")]
    family: Family,
    /// lambda / mu1 (two nodes) or lambda / mu (three nodes).
    #[arg(long, default_value_t = 0.5)]
    load: f64,
    /// mu1_star / mu1 for the two-node tandem.
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    /// Reward n_i for this 1-based coordinate; ignored with --model.
    #[arg(long, default_value_t = 1)]
    reward: usize,
}

impl ModelArgs {
    fn instance(&self) -> Result<Instance> {
        if let Some(path) = &self.model {
            return instance_from_file(path).with_context(|| format!("loading {}", path.display()));
        }
        let mut inst = match self.family {
            Family::Tandem2 => tandem2(&Tandem2::from_load(self.load, self.eta))?,
            Family::Tandem3 => tandem3(&Tandem3::from_load(self.load))?,
        };
        let dim = inst.model.dim();
        if self.reward == 0 || self.reward > dim {
            bail!("reward coordinate {} out of range 1..={dim}", self.reward);
        }
        inst.reward = PiecewiseFn::coordinate(inst.model.num_components(), dim, self.reward - 1);
        Ok(inst)
    }
}

#[derive(Args)]
struct ValidateArgs {
    /// Validate against a truncated chain of this size.
    #[arg(long)]
    truncation: Option<i64>,
    /// Horizon for the envelope check.
    #[arg(long, default_value_t = 100)]
    tmax: usize,
}

#[derive(Args)]
struct GeoArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Ratios r_i (comma separated); defaults to geometric midpoints.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// epsilon as a fraction of its admissible supremum.
    #[arg(long, default_value_t = 0.5)]
    eps_fraction: f64,
    /// Minimize the prefactor over rho_c instead of using (1 + theta) / 2.
    #[arg(long)]
    minimize: bool,
    /// Run the grid sweep of a geometric experiment config instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Upper,
    Lower,
    Both,
}

impl SideArg {
    fn sides(self) -> Vec<Side> {
        match self {
            SideArg::Upper => vec![Side::Upper],
            SideArg::Lower => vec![Side::Lower],
            SideArg::Both => vec![Side::Lower, Side::Upper],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StepsArg {
    Active,
    Symmetric,
    All,
}

impl From<StepsArg> for StepSelection {
    fn from(s: StepsArg) -> Self {
        match s {
            StepsArg::Active => StepSelection::Active,
            StepsArg::Symmetric => StepSelection::Symmetric,
            StepsArg::All => StepSelection::All,
        }
    }
}

#[derive(Args)]
struct LpArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
    degree: u32,
    #[arg(long, value_enum, default_value = "both")]
    side: SideArg,
    /// Step sets; each is solved and reported.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    steps: Vec<StepsArg>,
    #[command(flatten)]
    validate: ValidateArgs,
    /// Write the reports as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write each assembled program in MPS format, with the side appended to the stem.
    #[arg(long)]
    mps: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "both")]
    side: SideArg,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
    degree: u32,
    /// Step sets; each is solved and reported.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    steps: Vec<StepsArg>,
    #[command(flatten)]
    validate: ValidateArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Box size; 60 in two dimensions and 25 otherwise.
    #[arg(long)]
    truncation: Option<i64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the output path of the config; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    truncation: Option<i64>,
    #[arg(long)]
    tmax: Option<usize>,
}

fn degree(d: u32) -> Degree {
    if d == 1 { Degree::Linear } else { Degree::Quadratic }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

fn steps_name(s: StepsArg) -> &'static str {
    match s {
        StepsArg::Active => "active",
        StepsArg::Symmetric => "symmetric",
        StepsArg::All => "all",
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_drift(args: &ModelArgs) -> Result<()> {
    let inst = args.instance()?;
    let drift = inst.model.drift();
    println!("drift_sup = {:?}", drift.sup);
    if !drift.is_negative() {
        println!("negative_drift = false");
        return Ok(());
    }
    println!("negative_drift = true");
    let limits = ratio_limits(&inst.model);
    let r = default_ratios(&inst.model);
    println!("ratio_limits = {limits:?}");
    println!("default_ratios = {r:?}");
    println!("eps_star = {:e}", drift_margin(&inst.model, &r));
    let lyap = GeometricLyapunov::for_reward_default(&inst.model, &inst.reward)?;
    println!("geometric_b = {:e}", lyap.b);
    println!("geometric_small_set = {:?}", lyap.small.upper);
    println!("geometric_slack_40 = {:e}", lyap.drift_slack(&inst.model, 40));
    let q = QuadraticLyapunov::for_reward(&inst.model, &inst.reward)?;
    println!("quadratic_v = {:?}", q.v);
    println!("quadratic_b = {:e}", q.b);
    println!("quadratic_small_set = {:?}", q.small.as_ref().map(|s| s.upper.clone()));
    let weight = PiecewiseFn::uniform_linear(inst.model.num_components(), q.mu0, vec![q.f_star; inst.model.dim()]);
    println!("quadratic_slack_40 = {:e}", mu_drift_check(&inst.model, &q, &weight, 40));
    Ok(())
}

fn geo_bound(args: &GeoArgs) -> Result<()> {
    if let Some(path) = &args.config {
        let config = ExperimentConfig::load(path)?;
        if config.kind != SweepKind::Geometric {
            bail!("{} is not a geometric configuration", path.display());
        }
        let report = run_geometric_constants(&config)?;
        eprintln!(
            "{} points, min prefactor {:e}, min error bound {:e}",
            report.points.len(),
            report.min_prefactor,
            report.min_error_bound
        );
        let out = args.out.clone().or(config.output.clone());
        return emit(out.as_deref(), &report.to_csv()?);
    }
    let inst = args.model.instance()?;
    let r = args.ratios.clone().unwrap_or_else(|| default_ratios(&inst.model));
    let eps = args.eps_fraction * drift_margin(&inst.model, &r);
    let lyap = GeometricLyapunov::for_reward(&inst.model, &inst.reward, r, eps)?;
    let consts = if args.minimize {
        MeynConstants::minimize_position(&lyap, &inst.model, SmallSetBound::Explicit)?
    } else {
        MeynConstants::new(&lyap, &inst.model, 0.5, SmallSetBound::Explicit)?
    };
    let error = geometric_error_bound(&consts, &lyap, &inst.model, &inst.perturbed, &inst.stationary);
    let mean = inst.stationary.expectation(&inst.perturbed, &inst.reward)?;
    let text = serde_json::to_string_pretty(&serde_json::json!({
        "lyapunov": lyap,
        "constants": consts,
        "perturbed_mean": mean,
        "error_bound": error,
        "lower": mean - error,
        "upper": mean + error,
    }))?;
    emit(args.out.as_deref(), &(text + "\n"))
}

fn validate(report: &BoundReport, inst: &Instance, args: &ValidateArgs) -> Result<()> {
    let Some(t) = args.truncation else {
        return Ok(());
    };
    let oracle = stationary_with_check(&inst.model, &inst.reward, t)?.value();
    let chain = TruncatedChain::new(&inst.model, t)?;
    let v = validate_bounds(report, inst, &chain, args.tmax, Some(oracle));
    for c in &v.checks {
        println!("  check {} margin {:e} {}", c.name, c.margin, if c.passed { "passed" } else { "FAILED" });
    }
    println!("  validation = {}", if v.passed() { "passed" } else { "failed" });
    Ok(())
}

fn print_report(label: &str, r: &BoundReport) {
    let bound = r.bound.map_or_else(|| "-".to_string(), |b| format!("{b:.10}"));
    println!(
        "{label}: status = {:?}, bound = {bound}, variables = {}, constraints = {}, {:.2}s",
        r.status, r.diagnostics.variables, r.diagnostics.constraints, r.diagnostics.seconds
    );
}

fn lp_bound(args: &LpArgs) -> Result<()> {
    let inst = args.model.instance()?;
    let solver = DenseSimplex::default();
    let mut reports = Vec::new();
    for &steps in &args.steps {
        let ctx = BiasContext::new(&inst, BiasLpOptions { steps: steps.into(), reach: 1 })?;
        for side in args.side.sides() {
            let lp = ctx.assemble(side, degree(args.degree))?;
            let label = format!("{}_{}", side_name(side), steps_name(steps));
            if let Some(path) = &args.mps {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("lp");
                let file = path.with_file_name(format!("{stem}_{label}.mps"));
                fs::write(&file, to_mps(&lp.spec)).with_context(|| format!("writing {}", file.display()))?;
            }
            let r = solve_lp(&lp, &solver)?;
            print_report(&label, &r);
            if r.is_optimal() {
                validate(&r, &inst, &args.validate)?;
            }
            reports.push(r);
        }
    }
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let inst = args.model.instance()?;
    println!("perturbed_mean = {:.10}", inst.stationary.expectation(&inst.perturbed, &inst.reward)?);
    let mut reports = Vec::new();
    for &steps in &args.steps {
        let ctx = BiasContext::new(&inst, BiasLpOptions { steps: steps.into(), reach: 1 })?;
        for side in args.side.sides() {
            let r = comparison_bound(&ctx, side, degree(args.degree))?;
            print_report(&format!("{}_{}", side_name(side), steps_name(steps)), &r);
            if r.is_optimal() {
                validate(&r, &inst, &args.validate)?;
            }
            reports.push(r);
        }
    }
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let inst = args.model.instance()?;
    let t = args.truncation.unwrap_or(if inst.model.dim() >= 3 { 25 } else { 60 });
    let check = stationary_with_check(&inst.model, &inst.reward, t)?;
    println!("truncation = {t}");
    println!("value = {:.12}", check.coarse.value);
    println!("value_at_{} = {:.12}", t + 10, check.fine.value);
    println!("difference = {:e}", check.difference());
    println!("residual = {:e}", check.coarse.residual);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if args.truncation.is_some() {
        config.truncation = args.truncation;
    }
    if let Some(t) = args.tmax {
        config.t_max = t;
    }
    let out = args.out.clone().or(config.output.clone());
    if config.kind == SweepKind::Geometric {
        let report = run_geometric_constants(&config)?;
        eprintln!("min prefactor {:e}, min error bound {:e}", report.min_prefactor, report.min_error_bound);
        return emit(out.as_deref(), &report.to_csv()?);
    }
    let rows = run_sweep(&config)?;
    let frontier = feasibility_frontier(&rows);
    if !frontier.is_empty() {
        eprintln!("degree 2 optimal where degree 1 is infeasible at {frontier:?}");
    }
    emit(out.as_deref(), &rows_to_csv(&rows)?)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::CheckDrift(a) => check_drift(a),
        Command::GeoBound(a) => geo_bound(a),
        Command::LpBound(a) => lp_bound(a),
        Command::Compare(a) => compare(a),
        Command::Oracle(a) => oracle(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
