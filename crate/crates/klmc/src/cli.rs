//! Command-line definitions and subcommand bodies.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use klmc_core::coupling::ContractionConfig;
use klmc_core::diagnostics::{measure_local_error, rejection_sample_gibbs, MarginalOracle};
use klmc_core::potential::PotentialSpec;
use klmc_core::sampler::{chain_rng, default_initial_point, run_optimizer, RunConfig, UpdateOrder};
use klmc_core::theory::{build_f, choose_parameters, local_error_ode, theory_report, DEFAULT_GRID_POINTS};

use crate::config::ConfigFile;
use crate::drivers::{estimate_constants, estimated_params, run_contraction, run_ensemble, DEFAULT_ESTIMATE_PAIRS};
use crate::error::{CliError, CliResult};
use crate::output::{emit, fmt_f64, render_report, CsvOut};

#[derive(Debug, Parser)]
#[command(name = "klmc", version, about = "Kinetic Langevin Monte Carlo on SO(n)")]
pub struct Cli {
    /// Optional key=value file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble of sampler chains and record every trajectory.
    Sample(SampleArgs),
    /// Draw ground-truth X₁₁ samples.
    Oracle(OracleArgs),
    /// Print the convergence constants and bounds.
    Theory(TheoryArgs),
    /// Measure the one-step mean-square error against a fine reference.
    #[command(name = "localerror")]
    LocalError(LocalErrorArgs),
    /// Simulate coupled pairs and fit the decay of the semi-distance.
    Couple(CoupleArgs),
    /// Run the noiseless damped optimizer.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Potential selector, e.g. `x11sq:a=10`.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub record_every: Option<u64>,
    /// `splitting` (default) or `legacy`.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `quadrature` (default) or `rejection`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "C")]
    pub c: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Step size for the discretization terms.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Estimate L, D and C from the potential instead of taking them as given.
    #[arg(long)]
    pub estimate: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LocalErrorArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub potential: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long)]
    pub h_list: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub h_sim: Option<f64>,
    /// Recording intervals on [0, T].
    #[arg(long)]
    pub grid: Option<usize>,
    /// Coupling band width; defaults to 1e-3·γR.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub record_every: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn potential(cf: &ConfigFile, flag: Option<String>, default: &str) -> CliResult<PotentialSpec> {
    let s = cf.pick(flag, "potential", default.to_string())?;
    Ok(s.parse()?)
}

fn parse_h_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad entry {t:?} in --h-list")))
        })
        .collect()
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cf = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Sample(a) => sample(&cf, a),
        Command::Oracle(a) => oracle(&cf, a),
        Command::Theory(a) => theory(&cf, a),
        Command::LocalError(a) => local_error(&cf, a),
        Command::Couple(a) => couple(&cf, a),
        Command::Optimize(a) => optimize(&cf, a),
    }
}

fn sample(cf: &ConfigFile, a: SampleArgs) -> CliResult<()> {
    cf.check_known(&["n", "gamma", "h", "steps", "chains", "seed", "potential", "record-every", "order", "out"])?;
    let spec = potential(cf, a.potential, "x11sq:a=10")?;
    let mut cfg = RunConfig::new(cf.pick(a.n, "n", 10)?, spec);
    cfg.gamma = cf.pick(a.gamma, "gamma", cfg.gamma)?;
    cfg.h = cf.pick(a.h, "h", cfg.h)?;
    cfg.steps = cf.pick(a.steps, "steps", cfg.steps)?;
    cfg.chains = cf.pick(a.chains, "chains", cfg.chains)?;
    cfg.seed = cf.pick(a.seed, "seed", cfg.seed)?;
    cfg.record_every = cf.pick(a.record_every, "record-every", cfg.record_every)?;
    cfg.order = match cf.pick(a.order, "order", "splitting".to_string())?.as_str() {
        "splitting" => UpdateOrder::Splitting,
        "legacy" => UpdateOrder::Legacy,
        other => return Err(CliError::Config(format!("unknown update order {other:?}"))),
    };
    let out: PathBuf = cf.require(a.out, "out")?;
    let u = cfg.potential.build();
    let chains = run_ensemble(&cfg, u.as_ref())?;
    let mut w = CsvOut::create(&out, &["chain", "step", "time", "x11", "xi_norm2", "energy"])?;
    for rows in &chains {
        for r in rows {
            w.row([
                r.chain.to_string(),
                r.step.to_string(),
                fmt_f64(r.time),
                fmt_f64(r.x11),
                fmt_f64(r.xi_norm2),
                fmt_f64(r.energy),
            ])?;
        }
    }
    w.finish()
}

fn oracle(cf: &ConfigFile, a: OracleArgs) -> CliResult<()> {
    cf.check_known(&["n", "potential", "count", "seed", "mode", "out"])?;
    let n = cf.pick(a.n, "n", 10)?;
    let spec = potential(cf, a.potential, "x11sq:a=10")?;
    let count = cf.pick(a.count, "count", 10_000)?;
    let seed = cf.pick(a.seed, "seed", 0)?;
    let mode = cf.pick(a.mode, "mode", "quadrature".to_string())?;
    let out: PathBuf = cf.require(a.out, "out")?;
    let u = spec.build();
    let mut rng = chain_rng(seed, 0);
    let xs: Vec<f64> = match mode.as_str() {
        "rejection" => {
            let r = rejection_sample_gibbs(n, u.as_ref(), count, &mut rng)?;
            eprintln!("acceptance={} proposals={}", fmt_f64(r.acceptance), r.proposals);
            r.samples.iter().map(|g| g.x11()).collect()
        }
        "quadrature" => {
            let a = u.x11_quadratic().ok_or_else(|| {
                CliError::Config(format!("quadrature mode needs an x11sq potential, got {spec}"))
            })?;
            MarginalOracle::new(n, a)?.sample(count, &mut rng)
        }
        other => return Err(CliError::Config(format!("unknown oracle mode {other:?}"))),
    };
    let mut w = CsvOut::create(&out, &["x11"])?;
    for x in xs {
        w.row([fmt_f64(x)])?;
    }
    w.finish()
}

fn theory(cf: &ConfigFile, a: TheoryArgs) -> CliResult<()> {
    cf.check_known(&["L", "D", "gamma", "C", "m", "h", "grid", "estimate", "n", "potential", "pairs", "seed", "out"])?;
    let gamma = cf.pick(a.gamma, "gamma", 1.0)?;
    let h = cf.pick(a.h, "h", 0.1)?;
    let grid = cf.pick(a.grid, "grid", DEFAULT_GRID_POINTS)?;
    let (l, d, c, m) = if cf.flag(a.estimate, "estimate")? {
        let n = cf.pick(a.n, "n", 3)?;
        let spec = potential(cf, a.potential, "x11sq:a=1")?;
        let pairs = cf.pick(a.pairs, "pairs", DEFAULT_ESTIMATE_PAIRS)?;
        let seed = cf.pick(a.seed, "seed", 0)?;
        let est = estimate_constants(n, spec.build().as_ref(), pairs, seed)?;
        (
            cf.pick(a.l, "L", est.smoothness.lipschitz)?,
            cf.pick(a.d, "D", est.smoothness.diameter)?,
            cf.pick(a.c, "C", est.ad_norm)?,
            cf.pick(a.m, "m", n * (n - 1) / 2)?,
        )
    } else {
        (cf.require(a.l, "L")?, cf.require(a.d, "D")?, cf.require(a.c, "C")?, cf.require(a.m, "m")?)
    };
    let params = choose_parameters(l, d, gamma, c, m)?;
    let f = build_f(&params, grid)?;
    let report = theory_report(&params, &f, h)?;
    let out: Option<PathBuf> = cf.optional(a.out, "out")?;
    emit(out.as_deref(), &render_report(&report))
}

fn local_error(cf: &ConfigFile, a: LocalErrorArgs) -> CliResult<()> {
    cf.check_known(&["n", "gamma", "potential", "h-list", "reps", "seed", "out"])?;
    let spec = potential(cf, a.potential, "x11sq:a=1")?;
    let mut cfg = RunConfig::new(cf.pick(a.n, "n", 3)?, spec);
    cfg.gamma = cf.pick(a.gamma, "gamma", 1.0)?;
    cfg.seed = cf.pick(a.seed, "seed", 0)?;
    let hs = parse_h_list(&cf.pick(a.h_list, "h-list", "0.2,0.1,0.05,0.025".to_string())?)?;
    let reps = cf.pick(a.reps, "reps", 4000)?;
    let out: PathBuf = cf.require(a.out, "out")?;
    let u = cfg.potential.build();
    let params = estimated_params(cfg.n, u.as_ref(), cfg.gamma, DEFAULT_ESTIMATE_PAIRS, cfg.seed)?;
    let rows = measure_local_error(&cfg, u.as_ref(), &hs, reps, &mut chain_rng(cfg.seed, 0))?;
    let mut w = CsvOut::create(&out, &["h", "mse", "se", "bound", "fine_steps"])?;
    for r in &rows {
        let (x, y) = local_error_ode(r.h, &(&params).into());
        w.row([fmt_f64(r.h), fmt_f64(r.mse), fmt_f64(r.se), fmt_f64(x + y), r.fine_steps.to_string()])?;
    }
    w.finish()
}

fn couple(cf: &ConfigFile, a: CoupleArgs) -> CliResult<()> {
    cf.check_known(&["n", "gamma", "potential", "pairs", "T", "h-sim", "grid", "eps", "seed", "out", "report"])?;
    let n = cf.pick(a.n, "n", 3)?;
    let gamma = cf.pick(a.gamma, "gamma", 1.0)?;
    let spec = potential(cf, a.potential, "x11sq:a=1")?;
    let seed = cf.pick(a.seed, "seed", 0)?;
    let out: PathBuf = cf.require(a.out, "out")?;
    let report_path: Option<PathBuf> = cf.optional(a.report, "report")?;
    let u = spec.build();
    let params = estimated_params(n, u.as_ref(), gamma, DEFAULT_ESTIMATE_PAIRS, seed)?;
    let f = build_f(&params, DEFAULT_GRID_POINTS)?;
    let cfg = ContractionConfig {
        n,
        h_sim: cf.pick(a.h_sim, "h-sim", 0.01)?,
        t_end: cf.pick(a.t, "T", 20.0)?,
        pairs: cf.pick(a.pairs, "pairs", 500)?,
        grid: cf.pick(a.grid, "grid", 200)?,
        seed,
        eps: cf.pick(a.eps, "eps", params.default_epsilon())?,
    };
    let full = run_contraction(&cfg, u.as_ref(), &params, &f, true)?;
    let half_cfg = ContractionConfig { eps: cfg.eps / 2.0, ..cfg };
    let half = run_contraction(&half_cfg, u.as_ref(), &params, &f, false)?;

    let mut w = CsvOut::create(&out, &["pair", "t", "rho", "r", "G", "region"])?;
    for s in &full.rows {
        w.row([
            s.pair.to_string(),
            fmt_f64(s.t),
            fmt_f64(s.rho),
            fmt_f64(s.r),
            fmt_f64(s.g_factor),
            s.region.as_str().to_string(),
        ])?;
    }
    w.finish()?;
    let mut text = render_report(&full.report.key_values());
    for (k, v) in half.report.key_values() {
        text.push_str(&format!("{k}_half={}\n", fmt_f64(v)));
    }
    emit(report_path.as_deref(), &text)
}

fn optimize(cf: &ConfigFile, a: OptimizeArgs) -> CliResult<()> {
    cf.check_known(&["n", "gamma", "h", "steps", "potential", "seed", "record-every", "out"])?;
    let spec = potential(cf, a.potential, "x11sq:a=10")?;
    let mut cfg = RunConfig::new(cf.pick(a.n, "n", 10)?, spec);
    cfg.gamma = cf.pick(a.gamma, "gamma", cfg.gamma)?;
    cfg.h = cf.pick(a.h, "h", cfg.h)?;
    cfg.steps = cf.pick(a.steps, "steps", cfg.steps)?;
    cfg.seed = cf.pick(a.seed, "seed", cfg.seed)?;
    cfg.record_every = cf.pick(a.record_every, "record-every", cfg.record_every)?;
    let out: PathBuf = cf.require(a.out, "out")?;
    let u = cfg.potential.build();
    let g0 = default_initial_point(cfg.n, cfg.seed)?;
    let mut w = CsvOut::create(&out, &["step", "time", "x11", "xi_norm2", "energy"])?;
    let mut failed = None;
    run_optimizer(&cfg, u.as_ref(), &g0, |r| {
        if failed.is_none() {
            if let Err(e) = w.row([r.step.to_string(), fmt_f64(r.time), fmt_f64(r.x11), fmt_f64(r.xi_norm2), fmt_f64(r.energy)]) {
                failed = Some(e);
            }
        }
    })?;
    if let Some(e) = failed {
        return Err(e);
    }
    w.finish()
}
