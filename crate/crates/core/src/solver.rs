//! Alternating proximal solver: an outer PALM loop over `(v, y)` with a
//! nested fixed-point proximity iteration computing the projection-like
//! prox of the polytope indicator composed with `Q`.
//!
//! One outer step:
//!
//! ```text
//! p      = v - beta1 * grad_v H(v, y)
//! v_next = argmin_u 1/2 |u - p|^2  s.t.  Q u >= q     (inner FPPA)
//! y_next = S_m(y - beta2 * (1/gamma) (y - w_next))
//! ```
//!
//! The inner iteration is `x = Qp + z - theta Q Q^T z`,
//! `z_next = x - max(x, q)`, stopped on the relative change of `z`; the
//! prox output is `u = p - theta Q^T z`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::backtest::Portfolio;
use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg;
use crate::model::{self, ProblemData};
use crate::operators;

/// Guard for relative-change stopping rules: when the denominator norm is
/// below this, the numerator is compared against it absolutely.
const ZERO_NORM_GUARD: f64 = 1e-12;

/// Solver knobs. `beta1`, `beta2` and `theta` default to `0.99/L1`,
/// `0.99/L2` and `1.99/|Q|^2` when left unset; explicit values are
/// validated against the admissible ranges `(0, 1/L)` and `(0, 2/|Q|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Outer relative-change tolerance on `v`.
    pub tol_outer: f64,
    /// Inner iteration cap (completed z-updates).
    pub max_inner: usize,
    /// Inner relative-change tolerance on `z`.
    pub tol_inner: f64,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub theta: Option<f64>,
    /// Derive `theta` from the spectral norm of the CVaR block only
    /// (first 2T rows) instead of the full constraint matrix.
    pub theta_from_qtilde: bool,
    /// Reuse the final inner dual of one outer step as the start of the
    /// next (on by default): consecutive prox problems are nearby, and the
    /// loose default inner tolerance is well suited to warm starts.
    pub warm_start_inner: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_outer: 10_000,
            tol_outer: 1e-4,
            max_inner: 200,
            tol_inner: 1e-3,
            beta1: None,
            beta2: None,
            theta: None,
            theta_from_qtilde: false,
            warm_start_inner: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn resolve_steps(&self, pd: &ProblemData) -> Result<(f64, f64, f64)> {
        let beta1 = match self.beta1 {
            Some(b) => {
                if !(b > 0.0 && b < 1.0 / pd.l1) {
                    return Err(Error::Param(format!(
                        "beta1 = {b} outside (0, 1/L1 = {})",
                        1.0 / pd.l1
                    )));
                }
                b
            }
            None => 0.99 / pd.l1,
        };
        let beta2 = match self.beta2 {
            Some(b) => {
                if !(b > 0.0 && b < 1.0 / pd.l2) {
                    return Err(Error::Param(format!(
                        "beta2 = {b} outside (0, 1/L2 = {})",
                        1.0 / pd.l2
                    )));
                }
                b
            }
            None => 0.99 / pd.l2,
        };
        let theta = match self.theta {
            Some(t) => {
                if !(t > 0.0 && t * pd.q_norm_sq < 2.0) {
                    return Err(Error::Param(format!(
                        "theta = {t} outside (0, 2/|Q|^2 = {})",
                        2.0 / pd.q_norm_sq
                    )));
                }
                t
            }
            None => {
                let norm_sq = if self.theta_from_qtilde {
                    model::spectral_norm_sq_qtilde(pd, self.seed).value
                } else {
                    pd.q_norm_sq
                };
                1.99 / norm_sq
            }
        };
        Ok((beta1, beta2, theta))
    }
}

/// Result of one full solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub v_final: Vec<f64>,
    pub y_final: Vec<f64>,
    /// Completed outer steps.
    pub outer_iterations: usize,
    /// Inner iterations spent in each outer step.
    pub inner_iteration_counts: Vec<usize>,
    /// Surrogate objective `G(v, y)` at the start and after every outer
    /// step; length `outer_iterations + 1`. Entries are +inf while the
    /// iterate is still outside the diagnostic feasibility slack.
    pub objective_trace: Vec<f64>,
    /// Nonzero count of `y` after each outer step.
    pub y_nnz_trace: Vec<usize>,
    /// Infinity norm of `max(q - Q v_final, 0)`.
    pub feasibility_residual: f64,
    /// Surrogate objective at the final pair.
    pub g_final: f64,
    /// Relaxed single-variable objective at the final `v`.
    pub psi_final: f64,
    pub converged: bool,
    /// Seconds, filled by callers that time the solve; never serialized.
    pub wall_time: f64,
}

/// Inner prox output.
#[derive(Debug, Clone, PartialEq)]
pub struct FppaResult {
    /// Approximate minimizer of `1/2 |u - p|^2 + iota_q(Q u)`.
    pub u: Vec<f64>,
    /// Final dual iterate, reusable as a warm start.
    pub z: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct FppaBuffers {
    qp: Vec<f64>,
    qtz: Vec<f64>,
    qqtz: Vec<f64>,
    x: Vec<f64>,
}

impl FppaBuffers {
    fn new(pd: &ProblemData) -> Self {
        FppaBuffers {
            qp: vec![0.0; pd.n2],
            qtz: vec![0.0; pd.n1],
            qqtz: vec![0.0; pd.n2],
            x: vec![0.0; pd.n2],
        }
    }
}

fn fppa_iterate(
    pd: &ProblemData,
    p: &[f64],
    z: &mut Vec<f64>,
    theta: f64,
    tol: f64,
    cap: usize,
    buf: &mut FppaBuffers,
) -> (usize, bool) {
    model::apply_q_into(pd, p, &mut buf.qp);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        model::apply_qt_into(pd, z, &mut buf.qtz);
        model::apply_q_into(pd, &buf.qtz, &mut buf.qqtz);
        let mut diff_sq = 0.0;
        let mut old_sq = 0.0;
        for i in 0..pd.n2 {
            let x = buf.qp[i] + z[i] - theta * buf.qqtz[i];
            let z_next = x - x.max(pd.q[i]);
            let d = z_next - z[i];
            diff_sq += d * d;
            old_sq += z[i] * z[i];
            buf.x[i] = z_next;
        }
        core::mem::swap(z, &mut buf.x);
        iterations += 1;
        let num = fmath::sqrt(diff_sq);
        let den = fmath::sqrt(old_sq);
        if den < ZERO_NORM_GUARD {
            if num < ZERO_NORM_GUARD {
                converged = true;
                break;
            }
        } else if num / den <= tol {
            converged = true;
            break;
        }
    }
    (iterations, converged)
}

fn prox_output(pd: &ProblemData, p: &[f64], z: &[f64], theta: f64, buf: &mut FppaBuffers) -> Vec<f64> {
    model::apply_qt_into(pd, z, &mut buf.qtz);
    p.iter()
        .zip(&buf.qtz)
        .map(|(pi, qi)| pi - theta * qi)
        .collect()
}

/// Prox of the polytope indicator composed with `Q`, at point `p`, solved by
/// the fixed-point proximity iteration. Iteration-cap exit is reported in
/// the result, not an error.
pub fn fppa_prox(
    pd: &ProblemData,
    p: &[f64],
    z_init: &[f64],
    cfg: &SolverConfig,
) -> Result<FppaResult> {
    if p.len() != pd.n1 {
        return Err(Error::Shape(format!(
            "p has length {}, expected n1 = {}",
            p.len(),
            pd.n1
        )));
    }
    if z_init.len() != pd.n2 {
        return Err(Error::Shape(format!(
            "z has length {}, expected n2 = {}",
            z_init.len(),
            pd.n2
        )));
    }
    let (_, _, theta) = cfg.resolve_steps(pd)?;
    let mut buf = FppaBuffers::new(pd);
    let mut z = z_init.to_vec();
    let (iterations, converged) =
        fppa_iterate(pd, p, &mut z, theta, cfg.tol_inner, cfg.max_inner, &mut buf);
    let u = prox_output(pd, p, &z, theta, &mut buf);
    Ok(FppaResult {
        u,
        z,
        iterations,
        converged,
    })
}

/// Default starting pair: uniform weights in both blocks.
pub fn default_start(n: usize, t: usize) -> (Vec<f64>, Vec<f64>) {
    let v0 = operators::SplitVector::uniform_start(n, t).into_vec();
    let y0 = vec![1.0 / n as f64; n];
    (v0, y0)
}

/// Full PALM solve from the given starting pair.
pub fn palm_solve(
    pd: &ProblemData,
    cfg: &SolverConfig,
    v0: &[f64],
    y0: &[f64],
) -> Result<SolveReport> {
    if v0.len() != pd.n1 {
        return Err(Error::Shape(format!(
            "v0 has length {}, expected n1 = {}",
            v0.len(),
            pd.n1
        )));
    }
    if y0.len() != pd.n_assets() {
        return Err(Error::Shape(format!(
            "y0 has length {}, expected N = {}",
            y0.len(),
            pd.n_assets()
        )));
    }
    let (beta1, beta2, theta) = cfg.resolve_steps(pd)?;
    let n = pd.n_assets();
    let inv_gamma = 1.0 / pd.gamma;

    let mut v = v0.to_vec();
    let mut y = y0.to_vec();
    let mut z = vec![0.0; pd.n2];
    let mut p = vec![0.0; pd.n1];
    let mut buf = FppaBuffers::new(pd);

    let mut inner_counts = Vec::new();
    let mut trace = vec![operators::eval_g(pd, &v, &y)?];
    let mut y_nnz = Vec::new();
    let mut converged = false;
    let mut outer = 0;

    while outer < cfg.max_outer {
        // p = v - beta1 grad_v H(v, y)
        operators::grad_v_h_into(pd, &v, &y, &mut p);
        for (pi, vi) in p.iter_mut().zip(&v) {
            *pi = vi - beta1 * *pi;
        }

        if !cfg.warm_start_inner {
            z.fill(0.0);
        }
        let (inner, _) = fppa_iterate(pd, &p, &mut z, theta, cfg.tol_inner, cfg.max_inner, &mut buf);
        let v_next = prox_output(pd, &p, &z, theta, &mut buf);

        // y = S_m(y - beta2 (1/gamma)(y - w_next))
        let shrink = beta2 * inv_gamma;
        let mut y_pre = vec![0.0; n];
        for j in 0..n {
            y_pre[j] = y[j] - shrink * (y[j] - v_next[j]);
        }
        let y_next = operators::hard_threshold_m(&y_pre, pd.m)?;

        outer += 1;
        if !(linalg::all_finite(&v_next) && linalg::all_finite(&y_next)) {
            return Err(Error::Numerical(format!(
                "non-finite iterate at outer step {outer}"
            )));
        }

        inner_counts.push(inner);
        trace.push(operators::eval_g(pd, &v_next, &y_next)?);
        y_nnz.push(y_next.iter().filter(|x| x.abs() > 0.0).count());

        let num = linalg::dist2(&v_next, &v);
        let den = linalg::norm2(&v);
        v = v_next;
        y = y_next;
        if den < ZERO_NORM_GUARD {
            if num < ZERO_NORM_GUARD {
                converged = true;
                break;
            }
        } else if num / den <= cfg.tol_outer {
            converged = true;
            break;
        }
    }

    let feasibility_residual = operators::feasibility_violation(pd, &v)?;
    let g_final = *trace.last().expect("trace is never empty");
    let psi_final = operators::eval_psi(pd, &v)?;
    Ok(SolveReport {
        v_final: v,
        y_final: y,
        outer_iterations: outer,
        inner_iteration_counts: inner_counts,
        objective_trace: trace,
        y_nnz_trace: y_nnz,
        feasibility_residual,
        g_final,
        psi_final,
        converged,
        wall_time: 0.0,
    })
}

/// How to turn the final iterate into portfolio weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractMode {
    /// Leading N components of `v` as-is; may carry a small constraint
    /// violation, recorded on the portfolio.
    Raw,
    /// Hard-threshold to the budget, clip negatives, renormalize to sum 1.
    /// Exactly feasible and exactly m-sparse.
    Thresholded,
}

pub fn extract_portfolio(
    report: &SolveReport,
    pd: &ProblemData,
    mode: ExtractMode,
) -> Result<Portfolio> {
    let n = pd.n_assets();
    let w_raw = &report.v_final[..n];
    match mode {
        ExtractMode::Raw => {
            let support = (0..n).filter(|&j| w_raw[j].abs() > 0.0).collect();
            Ok(Portfolio {
                weights: w_raw.to_vec(),
                support,
                trade_index: 0,
                feasibility_residual: Some(report.feasibility_residual),
            })
        }
        ExtractMode::Thresholded => {
            let mut w = operators::hard_threshold_m(w_raw, pd.m)?;
            for x in &mut w {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::Degenerate(
                    "thresholded portfolio has no positive mass".into(),
                ));
            }
            for x in &mut w {
                *x /= total;
            }
            let support = (0..n).filter(|&j| w[j] > 0.0).collect();
            Ok(Portfolio {
                weights: w,
                support,
                trade_index: 0,
                feasibility_residual: None,
            })
        }
    }
}

/// Constant `zeta + 2 lambda sqrt((N-m)^2 + (N-m)) (|mu|^2 + rho |mu|)`
/// controlling how far the relaxed solution can sit from the hard-budget
/// one; `zeta` is the largest spread between any return entry and the
/// column of the leading selected asset.
pub fn approximation_constant(pd: &ProblemData, w: &[f64]) -> Result<f64> {
    let n = pd.n_assets();
    if w.len() != n {
        return Err(Error::Shape(format!(
            "w has length {}, expected N = {n}",
            w.len()
        )));
    }
    let j1 = operators::m_lav_indices(w, pd.m)?[0];
    let mut zeta = 0.0f64;
    for i in 0..pd.n_periods() {
        let row = pd.r.row(i);
        let anchor = row[j1];
        for &rij in row {
            zeta = zeta.max(fmath::abs(rij - anchor));
        }
    }
    let nm = (n - pd.m) as f64;
    let mu_norm = linalg::norm2(&pd.mu_hat);
    Ok(zeta
        + 2.0 * pd.lambda * fmath::sqrt(nm * nm + nm) * (mu_norm * mu_norm + pd.rho * mu_norm))
}

/// Bound `sqrt(2 L~ gamma)` on every weight outside the selected budget at
/// a solution of the relaxed model.
pub fn tail_bound(pd: &ProblemData, w: &[f64]) -> Result<f64> {
    Ok(fmath::sqrt(2.0 * approximation_constant(pd, w)? * pd.gamma))
}

/// Bound `sqrt(2 L~^3 gamma)` on the objective gap between the relaxed
/// optimum and the exact-budget optimum.
pub fn objective_gap_bound(pd: &ProblemData, w: &[f64]) -> Result<f64> {
    let l = approximation_constant(pd, w)?;
    Ok(fmath::sqrt(2.0 * l * l * l * pd.gamma))
}
