//! One windowed solve: assemble, run the alternating solver, write the
//! weights and the solve report.

use std::time::Instant;

use anyhow::{Context, Result, bail};
use sparse_cvar::model::assemble;
use sparse_cvar::panel::{WindowSlice, slice_window};
use sparse_cvar::solver::{ExtractMode, default_start, extract_portfolio, palm_solve};
use sparse_cvar::Error as CoreError;

use crate::config::{Mode, RunConfig};
use crate::dataio::load_panel;
use crate::output;

pub fn run(cfg: &RunConfig, t: Option<usize>, m: usize, dump_problem: bool) -> Result<()> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| CoreError::Param("no data file given (use --data)".into()))?;
    let (panel, provenance) = load_panel(data, cfg.percent_scale)?;

    let t = t.unwrap_or(cfg.window + 1);
    let window = match slice_window(&panel, t, cfg.window)? {
        WindowSlice::Ready(w) => w,
        WindowSlice::Insufficient => bail!(CoreError::Param(format!(
            "trade index {t} has fewer than {} periods of history",
            cfg.window
        ))),
    };

    let pd = assemble(&window, cfg.c, cfg.rho, cfg.gamma, m, cfg.lambda)?;
    let solver_cfg = cfg.solver_config();
    let (v0, y0) = default_start(pd.n_assets(), pd.n_periods());
    let started = Instant::now();
    let mut report = palm_solve(&pd, &solver_cfg, &v0, &y0)?;
    report.wall_time = started.elapsed().as_secs_f64();

    let mode = match cfg.mode {
        Mode::Raw => ExtractMode::Raw,
        Mode::Thresholded => ExtractMode::Thresholded,
    };
    let mut portfolio = extract_portfolio(&report, &pd, mode)?;
    portfolio.trade_index = t;

    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;
    output::write_text(&cfg.out.join("resolved.cfg"), &cfg.resolved_text())?;
    output::write_text(
        &cfg.out.join("weights.csv"),
        &output::weights_csv(&panel, &portfolio.weights),
    )?;
    let mut report_json = output::solve_report_json(&report, &pd);
    report_json["trade_index"] = serde_json::json!(t);
    output::write_json(&cfg.out.join("solve_report.json"), &report_json)?;
    output::write_json(
        &cfg.out.join("run_meta.json"),
        &output::run_meta_json(&provenance, cfg.seed),
    )?;
    if dump_problem {
        output::write_json(&cfg.out.join("problem.json"), &output::problem_dump_json(&pd))?;
    }

    eprintln!(
        "solved t={t} m={m} in {:.2}s: converged={} outer={} residual={:.2e} support={:?}",
        report.wall_time,
        report.converged,
        report.outer_iterations,
        report.feasibility_residual,
        portfolio.support,
    );
    Ok(())
}
