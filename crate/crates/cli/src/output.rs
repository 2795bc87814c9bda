//! Output-file helpers. All writers are deterministic: sorted JSON keys,
//! shortest round-trippable float formatting, trailing newline.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{Value, json};
use sparse_cvar::backtest::BacktestResult;
use sparse_cvar::metrics::OverlapSeries;
use sparse_cvar::{Portfolio, ProblemData, ReturnPanel, SolveReport};

use crate::dataio::DataProvenance;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Non-finite floats map to `null` (the objective trace starts at +inf
/// while the iterate is outside the diagnostic feasibility slack).
pub fn solve_report_json(report: &SolveReport, pd: &ProblemData) -> Value {
    json!({
        "converged": report.converged,
        "outer_iterations": report.outer_iterations,
        "inner_iteration_counts": report.inner_iteration_counts,
        "objective_trace": report.objective_trace,
        "y_nnz_trace": report.y_nnz_trace,
        "feasibility_residual": report.feasibility_residual,
        "g_final": report.g_final,
        "psi_final": report.psi_final,
        "m": pd.m,
        "gamma": pd.gamma,
        "lambda": pd.lambda,
        "c": pd.c,
        "rho": pd.rho,
    })
}

pub fn problem_dump_json(pd: &ProblemData) -> Value {
    let r_rows: Vec<Vec<f64>> = (0..pd.n_periods()).map(|i| pd.r.row(i).to_vec()).collect();
    json!({
        "r": r_rows,
        "mu_hat": pd.mu_hat,
        "h1": pd.h1,
        "h2": pd.h2,
        "q": pd.q,
        "c": pd.c,
        "rho": pd.rho,
        "lambda": pd.lambda,
        "gamma": pd.gamma,
        "m": pd.m,
        "n1": pd.n1,
        "n2": pd.n2,
        "l1": pd.l1,
        "l2": pd.l2,
        "q_norm_sq": pd.q_norm_sq,
    })
}

pub fn weights_csv(panel: &ReturnPanel, weights: &[f64]) -> String {
    let mut out = String::from("asset,weight\n");
    for (name, w) in panel.assets().iter().zip(weights) {
        out.push_str(name);
        out.push(',');
        out.push_str(&w.to_string());
        out.push('\n');
    }
    out
}

/// Columns: date, gross return factor, cumulative wealth, market return.
pub fn wealth_csv(panel: &ReturnPanel, result: &BacktestResult) -> String {
    let mut out = String::from("date,gross_return,wealth,market_return\n");
    for t in 1..=panel.n_periods() {
        let line = format!(
            "{},{},{},{}\n",
            panel.dates()[t - 1],
            result.period_returns[t - 1] + 1.0,
            result.wealth[t],
            result.market_returns[t - 1],
        );
        out.push_str(&line);
    }
    out
}

pub fn tc_csv(sweep: &[(f64, f64)]) -> String {
    let mut out = String::from("nu,final_wealth\n");
    for (nu, wealth) in sweep {
        out.push_str(&format!("{nu},{wealth}\n"));
    }
    out
}

pub fn supports_json(panel: &ReturnPanel, portfolios: &[Portfolio]) -> Value {
    let entries: Vec<Value> = portfolios
        .iter()
        .map(|p| {
            json!({
                "t": p.trade_index,
                "date": panel.dates()[p.trade_index - 1],
                "support": p.support,
            })
        })
        .collect();
    Value::Array(entries)
}

pub fn overlap_json(m_from: usize, m_to: usize, overlap: &OverlapSeries) -> Value {
    json!({
        "m_from": m_from,
        "m_to": m_to,
        "mean": overlap.mean,
        "std": overlap.std,
        "skipped": overlap.skipped,
        "series": overlap.series,
    })
}

pub fn provenance_json(prov: &DataProvenance) -> Value {
    json!({
        "path": prov.path,
        "block_title": prov.block_title,
        "header": prov.header,
        "rows": prov.rows,
        "assets": prov.assets,
        "first_date": prov.first_date,
        "last_date": prov.last_date,
        "extra_blocks_skipped": prov.extra_blocks_skipped,
        "percent_scale": prov.percent_scale,
    })
}

pub fn run_meta_json(prov: &DataProvenance, seed: u64) -> Value {
    json!({
        "data_provenance": provenance_json(prov),
        "prng": sparse_cvar::rng::SplitMix64::ALGORITHM,
        "seed": seed,
        "alpha_test": "ols-intercept-t",
        "sample_moment_convention": "unbiased (n-1)",
    })
}
