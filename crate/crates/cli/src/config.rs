//! Run configuration: defaults, flat key-value config files, and CLI flag
//! overrides. Every run writes its resolved configuration beside the
//! outputs so results can be reproduced from the output directory alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail};
use sparse_cvar::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Raw,
    Thresholded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Strategy {
    /// Windowed sparse mean-CVaR solves.
    Sparse,
    /// The 1/N baseline.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub window: usize,
    pub sparsity: Vec<usize>,
    pub c: f64,
    pub rho: f64,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub tol_inner: f64,
    pub max_inner: usize,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub nu_grid: Vec<f64>,
    pub mode: Mode,
    pub theta_use_qtilde: bool,
    pub strategy: Strategy,
    pub jobs: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub percent_scale: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            window: 60,
            sparsity: vec![10, 15, 20],
            c: 0.99,
            rho: 0.02,
            gamma: 1e-5,
            lambda: None,
            tol_inner: 1e-3,
            max_inner: 200,
            tol_outer: 1e-4,
            max_outer: 10_000,
            nu_grid: sparse_cvar::backtest::default_nu_grid(),
            mode: Mode::Thresholded,
            theta_use_qtilde: false,
            strategy: Strategy::Sparse,
            jobs: 0, // 0 = all available cores
            seed: 0,
            out: PathBuf::from("out"),
            percent_scale: true,
        }
    }
}

impl RunConfig {
    /// Apply `key = value` lines from a config file. Unknown keys are
    /// rejected so typos do not silently fall back to defaults.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", lineno + 1);
            };
            self.set(key.trim(), value.trim())
                .with_context(|| format!("config line {}", lineno + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "window" => self.window = value.parse().context("window")?,
            "sparsity" | "m" => self.sparsity = parse_list(value).context("sparsity")?,
            "c" => self.c = value.parse().context("c")?,
            "rho" => self.rho = value.parse().context("rho")?,
            "gamma" => self.gamma = value.parse().context("gamma")?,
            "lambda" => self.lambda = Some(value.parse().context("lambda")?),
            "tol_inner" => self.tol_inner = value.parse().context("tol_inner")?,
            "max_inner" => self.max_inner = value.parse().context("max_inner")?,
            "tol_outer" => self.tol_outer = value.parse().context("tol_outer")?,
            "max_outer" => self.max_outer = value.parse().context("max_outer")?,
            "nu_grid" => self.nu_grid = parse_list(value).context("nu_grid")?,
            "mode" => {
                self.mode = match value {
                    "raw" => Mode::Raw,
                    "thresholded" => Mode::Thresholded,
                    other => bail!("unknown mode `{other}`"),
                }
            }
            "theta_use_qtilde" => self.theta_use_qtilde = value.parse().context("theta_use_qtilde")?,
            "strategy" => {
                self.strategy = match value {
                    "sparse" => Strategy::Sparse,
                    "uniform" => Strategy::Uniform,
                    other => bail!("unknown strategy `{other}`"),
                }
            }
            "jobs" => self.jobs = value.parse().context("jobs")?,
            "seed" => self.seed = value.parse().context("seed")?,
            "out" => self.out = PathBuf::from(value),
            "percent_scale" => self.percent_scale = value.parse().context("percent_scale")?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Canonical text form, stable across runs.
    pub fn resolved_text(&self) -> String {
        let mut s = String::new();
        if let Some(data) = &self.data {
            let _ = writeln!(s, "data = {}", data.display());
        }
        let _ = writeln!(s, "c = {}", self.c);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "jobs = {}", self.jobs);
        if let Some(lambda) = self.lambda {
            let _ = writeln!(s, "lambda = {lambda}");
        }
        let _ = writeln!(s, "max_inner = {}", self.max_inner);
        let _ = writeln!(s, "max_outer = {}", self.max_outer);
        let _ = writeln!(
            s,
            "mode = {}",
            match self.mode {
                Mode::Raw => "raw",
                Mode::Thresholded => "thresholded",
            }
        );
        let _ = writeln!(s, "nu_grid = {}", join_list(&self.nu_grid));
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "percent_scale = {}", self.percent_scale);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sparsity = {}", join_list(&self.sparsity));
        let _ = writeln!(
            s,
            "strategy = {}",
            match self.strategy {
                Strategy::Sparse => "sparse",
                Strategy::Uniform => "uniform",
            }
        );
        let _ = writeln!(s, "theta_use_qtilde = {}", self.theta_use_qtilde);
        let _ = writeln!(s, "tol_inner = {}", self.tol_inner);
        let _ = writeln!(s, "tol_outer = {}", self.tol_outer);
        let _ = writeln!(s, "window = {}", self.window);
        s
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_outer: self.max_outer,
            tol_outer: self.tol_outer,
            max_inner: self.max_inner,
            tol_inner: self.tol_inner,
            theta_from_qtilde: self.theta_use_qtilde,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }

    pub fn effective_jobs(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .split(',')
        .map(|tok| tok.trim().parse::<T>().map_err(Into::into))
        .collect::<Result<Vec<T>>>()
}

fn join_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}
