//! Moving-window backtest: per-period portfolios, wealth under a
//! proportional transaction-cost model, and the uniform-buy-and-hold
//! market reference.
//!
//! At trade time `t` the wealth compounds by
//! `(x_t . w_t) * (1 - (nu/2) * sum_i |w_{t,i} - wtilde_{t-1,i}|)` where
//! `x_t = r_t + 1` is the price-relative vector and `wtilde` are the
//! previous weights evolved by the market move (zero before the first
//! trade, so the first period pays for entering the full position).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::{ReturnPanel, WindowSlice, Window, slice_window};

/// Weights on the simplex with their declared support. Thresholded
/// extraction guarantees nonnegative weights summing to one; raw extraction
/// records the achieved constraint residual instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub weights: Vec<f64>,
    pub support: Vec<usize>,
    /// 1-based trade period this portfolio was used at; 0 when unplaced.
    pub trade_index: usize,
    pub feasibility_residual: Option<f64>,
}

impl Portfolio {
    /// The 1/N portfolio.
    pub fn uniform(n: usize, trade_index: usize) -> Self {
        Portfolio {
            weights: vec![1.0 / n as f64; n],
            support: (0..n).collect(),
            trade_index,
            feasibility_residual: None,
        }
    }
}

/// Wealth and return series for one backtest run at one cost rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub portfolios: Vec<Portfolio>,
    /// Cumulative wealth, `wealth[0] = 1`, one entry per period after that.
    pub wealth: Vec<f64>,
    /// Cost-free per-period strategy returns `x_t . w_t - 1`.
    pub period_returns: Vec<f64>,
    /// Uniform-buy-and-hold market returns over the same periods.
    pub market_returns: Vec<f64>,
    /// Transaction cost rate the wealth series was computed at.
    pub nu: f64,
}

impl BacktestResult {
    pub fn final_wealth(&self) -> f64 {
        *self.wealth.last().expect("wealth series is never empty")
    }
}

/// One portfolio per trade period `1..=T_total`. Periods without enough
/// history get exactly the uniform portfolio; the strategy closure is only
/// consulted once a full window exists.
pub fn trade_portfolios<F>(
    panel: &ReturnPanel,
    window_len: usize,
    mut strategy: F,
) -> Result<Vec<Portfolio>>
where
    F: FnMut(&Window) -> Result<Portfolio>,
{
    let n = panel.n_assets();
    let mut out = Vec::with_capacity(panel.n_periods());
    for t in 1..=panel.n_periods() {
        let portfolio = match slice_window(panel, t, window_len)? {
            WindowSlice::Insufficient => Portfolio::uniform(n, t),
            WindowSlice::Ready(window) => {
                let mut p = strategy(&window)?;
                if p.weights.len() != n {
                    return Err(Error::Shape(format!(
                        "strategy portfolio has {} weights, expected {n}",
                        p.weights.len()
                    )));
                }
                p.trade_index = t;
                p
            }
        };
        out.push(portfolio);
    }
    Ok(out)
}

/// Wealth recursion over a precomputed portfolio sequence. The sequence is
/// cost-blind, so sweeps over `nu` reuse it without re-solving.
pub fn wealth_from_portfolios(
    panel: &ReturnPanel,
    portfolios: &[Portfolio],
    nu: f64,
) -> Result<BacktestResult> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::Param(format!("cost rate {nu} outside [0, 1]")));
    }
    let periods = panel.n_periods();
    if portfolios.len() != periods {
        return Err(Error::Shape(format!(
            "{} portfolios for {periods} periods",
            portfolios.len()
        )));
    }
    let n = panel.n_assets();
    let mut wealth = Vec::with_capacity(periods + 1);
    wealth.push(1.0);
    let mut period_returns = Vec::with_capacity(periods);
    let mut evolved = vec![0.0; n];
    let mut x = vec![0.0; n];

    for t in 1..=periods {
        for (xi, ri) in x.iter_mut().zip(panel.period_returns(t)) {
            *xi = ri + 1.0;
        }
        let w = &portfolios[t - 1].weights;
        let gross = linalg::dot(&x, w);
        let mut turnover = 0.0;
        for (wi, ei) in w.iter().zip(&evolved) {
            turnover += crate::fmath::abs(wi - ei);
        }
        let factor = gross * (1.0 - 0.5 * nu * turnover);
        if !(factor > 0.0) {
            return Err(Error::Numerical(format!(
                "backtest aborted: nonpositive wealth factor {factor} at period {t}"
            )));
        }
        wealth.push(wealth[t - 1] * factor);
        period_returns.push(gross - 1.0);
        for ((ei, wi), xi) in evolved.iter_mut().zip(w).zip(&x) {
            *ei = wi * xi / gross;
        }
    }

    let market_returns = ubah_market(panel, 1)?;
    Ok(BacktestResult {
        portfolios: portfolios.to_vec(),
        wealth,
        period_returns,
        market_returns,
        nu,
    })
}

/// Full backtest: portfolio per period, then the wealth recursion.
pub fn run_backtest<F>(
    panel: &ReturnPanel,
    window_len: usize,
    strategy: F,
    nu: f64,
) -> Result<BacktestResult>
where
    F: FnMut(&Window) -> Result<Portfolio>,
{
    let portfolios = trade_portfolios(panel, window_len, strategy)?;
    wealth_from_portfolios(panel, &portfolios, nu)
}

/// Uniform-buy-and-hold market returns from 1-based trade period `start`:
/// equal initial weights evolved by price relatives, never rebalanced.
pub fn ubah_market(panel: &ReturnPanel, start: usize) -> Result<Vec<f64>> {
    let periods = panel.n_periods();
    if start == 0 || start > periods {
        return Err(Error::Param(format!(
            "start {start} outside 1..={periods}"
        )));
    }
    let n = panel.n_assets();
    let mut w = vec![1.0 / n as f64; n];
    let mut x = vec![0.0; n];
    let mut out = Vec::with_capacity(periods - start + 1);
    for t in start..=periods {
        for (xi, ri) in x.iter_mut().zip(panel.period_returns(t)) {
            *xi = ri + 1.0;
        }
        let gross = linalg::dot(&x, &w);
        out.push(gross - 1.0);
        if gross != 0.0 {
            for (wi, xi) in w.iter_mut().zip(&x) {
                *wi = *wi * xi / gross;
            }
        }
    }
    Ok(out)
}

/// Default transaction-cost grid: 0 to 0.5% in 11 points.
pub fn default_nu_grid() -> Vec<f64> {
    (0..11).map(|i| 0.005 * i as f64 / 10.0).collect()
}

/// Final wealth across a cost grid; the portfolio sequence is computed once
/// (strategies never observe `nu`).
pub fn tc_sweep<F>(
    panel: &ReturnPanel,
    window_len: usize,
    strategy: F,
    nu_grid: &[f64],
) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(&Window) -> Result<Portfolio>,
{
    let portfolios = trade_portfolios(panel, window_len, strategy)?;
    tc_sweep_portfolios(panel, &portfolios, nu_grid)
}

/// Cost sweep over an already-computed portfolio sequence.
pub fn tc_sweep_portfolios(
    panel: &ReturnPanel,
    portfolios: &[Portfolio],
    nu_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    nu_grid
        .iter()
        .map(|&nu| {
            let res = wealth_from_portfolios(panel, portfolios, nu)?;
            Ok((nu, res.final_wealth()))
        })
        .collect()
}
