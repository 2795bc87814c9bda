//! Synthetic sparse-regression validation of the tailed relaxation.
//!
//! Two models over a design matrix `X` and responses `y`:
//!
//! ```text
//! original:  min_b   1/2 |X b - y|^2            s.t. |b|_0 <= m
//! relaxed:   min_b,e 1/2 |X b - y|^2 + 1/(2 gamma) |b - e|^2   s.t. |e|_0 <= m
//! ```
//!
//! Both are solved exactly at small scale by exhaustive support enumeration;
//! the relaxed one is also solved by the same alternating scheme the
//! portfolio solver uses. Agreement of the three as `gamma` shrinks is the
//! validation target.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::operators;
use crate::rng::SplitMix64;

/// Cap on the number of enumerated supports.
pub const ENUMERATION_GUARD: usize = 100_000;

/// One synthetic instance. Draw order per sample: the `d` design normals,
/// then the response noise, so instances are reproducible from the seed and
/// the generator identity alone.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    /// n x d design matrix.
    pub x: Matrix,
    pub y: Vec<f64>,
    pub beta_true: Vec<f64>,
    pub m: usize,
    pub gamma: f64,
    pub seed: u64,
}

/// Default instance: 50 samples, 10 features with covariance
/// `Sigma_ij = 0.5^|i-j|`, true coefficients `(1, 1, 1, 0, ..., 0)`,
/// unit noise, budget 3.
pub fn generate_instance(seed: u64) -> RegressionInstance {
    generate_instance_with(seed, 50, 10, 3, 1e-7)
}

pub fn generate_instance_with(
    seed: u64,
    n: usize,
    d: usize,
    m: usize,
    gamma: f64,
) -> RegressionInstance {
    let mut beta_true = vec![0.0; d];
    for b in beta_true.iter_mut().take(3.min(d)) {
        *b = 1.0;
    }
    let sigma = ar_covariance(d);
    let l = linalg::cholesky_factor(&sigma).expect("AR(1) covariance is positive definite");
    let mut rng = SplitMix64::new(seed);
    let mut x = Matrix::zeros(n, d);
    let mut y = vec![0.0; n];
    let mut g = vec![0.0; d];
    for i in 0..n {
        for gj in &mut g {
            *gj = rng.next_normal();
        }
        for j in 0..d {
            // row of the lower-triangular factor times the normal vector
            let mut s = 0.0;
            for k in 0..=j {
                s += l.get(j, k) * g[k];
            }
            x.set(i, j, s);
        }
        let eps = rng.next_normal();
        y[i] = linalg::dot(x.row(i), &beta_true) + eps;
    }
    RegressionInstance {
        x,
        y,
        beta_true,
        m,
        gamma,
        seed,
    }
}

/// `Sigma_ij = 0.5^|i-j|`.
pub fn ar_covariance(d: usize) -> Matrix {
    let mut s = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut v = 1.0;
            for _ in 0..i.abs_diff(j) {
                v *= 0.5;
            }
            s.set(i, j, v);
        }
    }
    s
}

/// Outcome of the alternating solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressOutcome {
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Relaxed objective at the final pair.
    pub objective: f64,
}

/// Alternating scheme on the relaxed model:
/// `b <- b - a1 [X^T(Xb - y) + (1/gamma)(b - e)]`,
/// `e <- S_m((1 - a2/gamma) e + (a2/gamma) b)`, with
/// `a1 = 0.99 / |X^T X + I/gamma|_2`, `a2 = 0.99 gamma`, zero starts.
pub fn palm_regress(
    inst: &RegressionInstance,
    iterations_cap: usize,
    tol: f64,
) -> Result<RegressOutcome> {
    palm_regress_impl(inst, iterations_cap, tol, None)
}

/// Same solve, recording the relaxed objective after every iteration.
/// Only sensible with small caps.
pub fn palm_regress_with_trace(
    inst: &RegressionInstance,
    iterations_cap: usize,
    tol: f64,
) -> Result<(RegressOutcome, Vec<f64>)> {
    let mut trace = Vec::new();
    let out = palm_regress_impl(inst, iterations_cap, tol, Some(&mut trace))?;
    Ok((out, trace))
}

fn palm_regress_impl(
    inst: &RegressionInstance,
    iterations_cap: usize,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<RegressOutcome> {
    let gamma = inst.gamma;
    if gamma <= 0.0 {
        return Err(Error::Param(format!("gamma {gamma} must be positive")));
    }
    let d = inst.x.cols();
    let inv_gamma = 1.0 / gamma;

    // precompute the normal-equation pieces; every iteration is then O(d^2)
    let xtx = gram(&inst.x);
    let xty = xt_vec(&inst.x, &inst.y);

    let op_norm = linalg::largest_eigenvalue_sym(d, inst.seed, |v, out| {
        mat_vec_into(&xtx, v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += inv_gamma * vi;
        }
    });
    let a1 = 0.99 / op_norm.value;
    let a2 = 0.99 * gamma;
    let blend = a2 * inv_gamma;

    let mut beta = vec![0.0; d];
    let mut eta = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < iterations_cap {
        mat_vec_into(&xtx, &beta, &mut grad);
        let mut step_sq = 0.0;
        let mut base_sq = 0.0;
        for j in 0..d {
            let g = grad[j] - xty[j] + inv_gamma * (beta[j] - eta[j]);
            let delta = a1 * g;
            step_sq += delta * delta;
            base_sq += beta[j] * beta[j] + eta[j] * eta[j];
            beta[j] -= delta;
        }
        let mut eta_pre = vec![0.0; d];
        for j in 0..d {
            eta_pre[j] = (1.0 - blend) * eta[j] + blend * beta[j];
        }
        let eta_next = operators::hard_threshold_m(&eta_pre, inst.m)?;
        let mut eta_step_sq = 0.0;
        for j in 0..d {
            let delta = eta_next[j] - eta[j];
            eta_step_sq += delta * delta;
        }
        eta = eta_next;
        iterations += 1;

        if !(linalg::all_finite(&beta) && linalg::all_finite(&eta)) {
            return Err(Error::Numerical(format!(
                "non-finite regression iterate at step {iterations}"
            )));
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(relaxed_objective(inst, &beta, &eta));
        }

        let num = crate::fmath::sqrt(step_sq + eta_step_sq);
        let den = crate::fmath::sqrt(base_sq);
        if den < 1e-12 {
            if num < 1e-12 {
                converged = true;
                break;
            }
        } else if num / den <= tol {
            converged = true;
            break;
        }
    }

    let objective = relaxed_objective(inst, &beta, &eta);
    Ok(RegressOutcome {
        beta,
        eta,
        iterations,
        converged,
        objective,
    })
}

/// `1/2 |X b - y|^2 + 1/(2 gamma) |b - e|^2`.
pub fn relaxed_objective(inst: &RegressionInstance, beta: &[f64], eta: &[f64]) -> f64 {
    0.5 * residual_sq(&inst.x, beta, &inst.y) + 0.5 / inst.gamma * dist_sq(beta, eta)
}

/// `1/2 |X b - y|^2`.
pub fn original_objective(inst: &RegressionInstance, beta: &[f64]) -> f64 {
    0.5 * residual_sq(&inst.x, beta, &inst.y)
}

/// Globally optimal support by direct enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    pub support: Vec<usize>,
    pub beta: Vec<f64>,
    /// The m-sparse block variable; only present for the relaxed model.
    pub eta: Option<Vec<f64>>,
}

/// Exhaustive support enumeration. `relaxed = false` solves restricted
/// least squares per support; `relaxed = true` solves the joint
/// `(d + m) x (d + m)` positive-definite system per support.
pub fn exhaustive_oracle(inst: &RegressionInstance, relaxed: bool) -> Result<OracleResult> {
    let d = inst.x.cols();
    let m = inst.m;
    if m == 0 || m > d {
        return Err(Error::Param(format!("budget {m} outside 1..={d}")));
    }
    let cases = binomial(d, m);
    if cases > ENUMERATION_GUARD {
        return Err(Error::Param(format!(
            "C({d}, {m}) = {cases} exceeds the enumeration guard {ENUMERATION_GUARD}"
        )));
    }

    let xtx = gram(&inst.x);
    let xty = xt_vec(&inst.x, &inst.y);

    let mut best: Option<OracleResult> = None;
    let mut support = (0..m).collect::<Vec<usize>>();
    loop {
        let candidate = if relaxed {
            solve_relaxed_support(inst, &xtx, &xty, &support)?
        } else {
            solve_original_support(inst, &xtx, &xty, &support)?
        };
        if best.as_ref().is_none_or(|b| candidate.objective < b.objective) {
            best = Some(candidate);
        }
        if !next_combination(&mut support, d) {
            break;
        }
    }
    Ok(best.expect("at least one support was enumerated"))
}

fn solve_original_support(
    inst: &RegressionInstance,
    xtx: &Matrix,
    xty: &[f64],
    support: &[usize],
) -> Result<OracleResult> {
    let m = support.len();
    let mut a = Matrix::zeros(m, m);
    let mut b = vec![0.0; m];
    for (p, &jp) in support.iter().enumerate() {
        for (q, &jq) in support.iter().enumerate() {
            a.set(p, q, xtx.get(jp, jq));
        }
        b[p] = xty[jp];
    }
    let coeffs = linalg::cholesky_solve(&a, &b)?;
    let mut beta = vec![0.0; inst.x.cols()];
    for (p, &jp) in support.iter().enumerate() {
        beta[jp] = coeffs[p];
    }
    let objective = original_objective(inst, &beta);
    Ok(OracleResult {
        objective,
        support: support.to_vec(),
        beta,
        eta: None,
    })
}

fn solve_relaxed_support(
    inst: &RegressionInstance,
    xtx: &Matrix,
    xty: &[f64],
    support: &[usize],
) -> Result<OracleResult> {
    let d = inst.x.cols();
    let m = support.len();
    let inv_gamma = 1.0 / inst.gamma;
    // joint normal system in (beta, eta_S):
    //   [ X^T X + I/gamma      -P_S^T/gamma ] [beta ]   [X^T y]
    //   [ -P_S/gamma            I_m/gamma   ] [eta_S] = [  0  ]
    let dim = d + m;
    let mut a = Matrix::zeros(dim, dim);
    let mut b = vec![0.0; dim];
    for i in 0..d {
        for j in 0..d {
            a.set(i, j, xtx.get(i, j));
        }
        a.set(i, i, a.get(i, i) + inv_gamma);
        b[i] = xty[i];
    }
    for (p, &jp) in support.iter().enumerate() {
        a.set(jp, d + p, -inv_gamma);
        a.set(d + p, jp, -inv_gamma);
        a.set(d + p, d + p, inv_gamma);
    }
    let sol = linalg::cholesky_solve(&a, &b)?;
    let beta = sol[..d].to_vec();
    let mut eta = vec![0.0; d];
    for (p, &jp) in support.iter().enumerate() {
        eta[jp] = sol[d + p];
    }
    let objective = relaxed_objective(inst, &beta, &eta);
    Ok(OracleResult {
        objective,
        support: support.to_vec(),
        beta,
        eta: Some(eta),
    })
}

/// Nonzero indices, ascending.
pub fn support_of(v: &[f64]) -> Vec<usize> {
    (0..v.len()).filter(|&j| v[j].abs() > 0.0).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > (ENUMERATION_GUARD as u128) * 2 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Advance to the next lexicographic k-subset of `0..n`; false when done.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn gram(x: &Matrix) -> Matrix {
    let d = x.cols();
    let mut g = Matrix::zeros(d, d);
    for i in 0..x.rows() {
        let row = x.row(i);
        for p in 0..d {
            for q in p..d {
                let v = g.get(p, q) + row[p] * row[q];
                g.set(p, q, v);
            }
        }
    }
    for p in 0..d {
        for q in 0..p {
            g.set(p, q, g.get(q, p));
        }
    }
    g
}

fn xt_vec(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let d = x.cols();
    let mut out = vec![0.0; d];
    for i in 0..x.rows() {
        let row = x.row(i);
        for (o, &xij) in out.iter_mut().zip(row) {
            *o += xij * y[i];
        }
    }
    out
}

fn mat_vec_into(a: &Matrix, v: &[f64], out: &mut [f64]) {
    for i in 0..a.rows() {
        out[i] = linalg::dot(a.row(i), v);
    }
}

fn residual_sq(x: &Matrix, beta: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.rows() {
        let r = linalg::dot(x.row(i), beta) - y[i];
        s += r * r;
    }
    s
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}
