//! Command-line front end for sparse mean-CVaR portfolio construction.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input error.

mod commands;
mod config;
mod dataio;
mod output;
mod parallel;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Mode, RunConfig, Strategy};

#[derive(Parser)]
#[command(
    name = "sparse-cvar",
    version,
    about = "Cardinality-budgeted mean-CVaR portfolios: windowed solves, backtests, and a sparse-regression demo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one moving window and write the portfolio weights.
    Solve(SolveArgs),
    /// Run the full moving-window backtest with metrics and cost sweep.
    Backtest(BacktestArgs),
    /// Ten seeded sparse-regression trials against exhaustive oracles.
    RegressDemo(RegressArgs),
    /// Re-emit a return file in the canonical layout (decimal returns,
    /// header always present).
    Export(ExportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; CLI flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Return CSV (first column YYYYMM).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Moving-window length in months.
    #[arg(long)]
    window: Option<usize>,
    /// Tail-relaxation parameter.
    #[arg(long)]
    gamma: Option<f64>,
    /// Expected-return target.
    #[arg(long)]
    rho: Option<f64>,
    /// CVaR confidence level.
    #[arg(long)]
    c: Option<f64>,
    /// Mixing weight override (default: derived from the window).
    #[arg(long)]
    lambda: Option<f64>,
    /// Portfolio extraction mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Derive the projection step from the CVaR block only.
    #[arg(long)]
    theta_use_qtilde: bool,
    /// Worker threads for window solves (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat input values as percentages (the source files are in percent).
    #[arg(long)]
    percent_scale: Option<bool>,
    /// Inner (projection) relative tolerance.
    #[arg(long)]
    tol_inner: Option<f64>,
    /// Inner iteration cap.
    #[arg(long)]
    max_inner: Option<usize>,
    /// Outer relative tolerance.
    #[arg(long)]
    tol_outer: Option<f64>,
    /// Outer iteration cap.
    #[arg(long)]
    max_outer: Option<usize>,
}

impl CommonArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = &self.data {
            cfg.data = Some(v.clone());
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = Some(v);
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if self.theta_use_qtilde {
            cfg.theta_use_qtilde = true;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.percent_scale {
            cfg.percent_scale = v;
        }
        if let Some(v) = self.tol_inner {
            cfg.tol_inner = v;
        }
        if let Some(v) = self.max_inner {
            cfg.max_inner = v;
        }
        if let Some(v) = self.tol_outer {
            cfg.tol_outer = v;
        }
        if let Some(v) = self.max_outer {
            cfg.max_outer = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// 1-based trade index; the window covers the preceding months
    /// (default: first index with a full window).
    #[arg(long)]
    t: Option<usize>,
    /// Sparsity budget (default: first entry of the configured list).
    #[arg(long)]
    m: Option<usize>,
    /// Also write the assembled problem as problem.json.
    #[arg(long)]
    dump_problem: bool,
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sparsity budgets, e.g. 10,15,20.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Transaction-cost rates for the sweep, e.g. 0,0.001,0.002.
    #[arg(long, value_delimiter = ',')]
    nu_grid: Option<Vec<f64>>,
    /// Portfolio strategy.
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
}

#[derive(Args)]
struct ExportArgs {
    /// Return CSV (first column YYYYMM).
    #[arg(long)]
    data: PathBuf,
    /// Destination file.
    #[arg(long)]
    out_file: PathBuf,
    /// Treat input values as percentages.
    #[arg(long, default_value_t = true)]
    percent_scale: bool,
}

#[derive(Args)]
struct RegressArgs {
    /// Sample count per trial.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Sparsity budget.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Relaxation parameter.
    #[arg(long, default_value_t = 1e-7)]
    gamma: f64,
    /// Iteration cap for the alternating solver.
    #[arg(long, default_value_t = 5_000_000)]
    iterations_cap: usize,
    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.common.resolve()?;
            let m = args
                .m
                .unwrap_or_else(|| cfg.sparsity.first().copied().unwrap_or(10));
            commands::solve::run(&cfg, args.t, m, args.dump_problem)
        }
        Command::Backtest(args) => {
            let mut cfg = args.common.resolve()?;
            if let Some(m) = args.m {
                cfg.sparsity = m;
            }
            if let Some(grid) = args.nu_grid {
                cfg.nu_grid = grid;
            }
            if let Some(strategy) = args.strategy {
                cfg.strategy = strategy;
            }
            commands::backtest::run(&cfg)
        }
        Command::RegressDemo(args) => {
            let params = commands::regress::RegressParams {
                n: args.n,
                d: args.d,
                m: args.m,
                gamma: args.gamma,
                iterations_cap: args.iterations_cap,
                tol: args.tol,
                out: args.out,
            };
            commands::regress::run(&params)
        }
        Command::Export(args) => {
            let (panel, _) = dataio::load_panel(&args.data, args.percent_scale)?;
            dataio::save_panel(&panel, &args.out_file)
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<sparse_cvar::Error>() {
            return match core {
                sparse_cvar::Error::Numerical(_) | sparse_cvar::Error::Degenerate(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
