//! Independent oracles for testing the sparse-cvar crate. Everything here
//! recomputes results from definitions (dense matrices, quadrature,
//! enumeration) rather than calling the production code paths it checks.

use sparse_cvar::model::{assemble, default_lambda};
use sparse_cvar::rng::SplitMix64;
use sparse_cvar::solver::{SolverConfig, default_start, palm_solve};
use sparse_cvar::{Matrix, ProblemData, Window};

/// Dense constraint matrix built row by row from the block definition:
/// CVaR rows `[R 1 I]`, slack rows `[0 0 I]`, weight rows `[I 0 0]`, and
/// the two budget rows `[±1^T 0 0]`.
pub fn dense_q(pd: &ProblemData) -> Vec<Vec<f64>> {
    let n = pd.n_assets();
    let t = pd.n_periods();
    let n1 = n + 1 + t;
    let mut rows = Vec::with_capacity(2 * t + n + 2);
    for i in 0..t {
        let mut row = vec![0.0; n1];
        row[..n].copy_from_slice(pd.r.row(i));
        row[n] = 1.0;
        row[n + 1 + i] = 1.0;
        rows.push(row);
    }
    for i in 0..t {
        let mut row = vec![0.0; n1];
        row[n + 1 + i] = 1.0;
        rows.push(row);
    }
    for j in 0..n {
        let mut row = vec![0.0; n1];
        row[j] = 1.0;
        rows.push(row);
    }
    let mut ones = vec![0.0; n1];
    for x in ones.iter_mut().take(n) {
        *x = 1.0;
    }
    rows.push(ones.clone());
    for x in ones.iter_mut().take(n) {
        *x = -1.0;
    }
    rows.push(ones);
    rows
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(r, x)| r * x).sum())
        .collect()
}

pub fn mat_t_vec(a: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
    let cols = a[0].len();
    let mut out = vec![0.0; cols];
    for (row, ui) in a.iter().zip(u) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += r * ui;
        }
    }
    out
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest eigenvalue of a dense symmetric matrix by cyclic Jacobi
/// rotations. Independent of the crate's power iteration.
pub fn jacobi_max_eigenvalue(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p][q] * m[p][q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

/// `|Q|_2^2` from the dense matrix via Jacobi on `Q^T Q`.
pub fn dense_spectral_norm_sq(q: &[Vec<f64>]) -> f64 {
    let n1 = q[0].len();
    let mut qtq = vec![vec![0.0; n1]; n1];
    for row in q {
        for i in 0..n1 {
            for j in 0..n1 {
                qtq[i][j] += row[i] * row[j];
            }
        }
    }
    jacobi_max_eigenvalue(&qtq)
}

/// Central finite-difference gradient with the given step.
pub fn finite_diff_gradient<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let orig = xp[j];
        xp[j] = orig + h;
        let up = f(&xp);
        xp[j] = orig - h;
        let dn = f(&xp);
        xp[j] = orig;
        g[j] = (up - dn) / (2.0 * h);
    }
    g
}

/// Term-by-term recomputation of `f(v) = h1.v + lambda (h2.v - rho)^2`
/// without the crate's dot-product helpers.
pub fn naive_f(pd: &ProblemData, v: &[f64]) -> f64 {
    let mut lin = 0.0;
    for i in 0..v.len() {
        lin += pd.h1[i] * v[i];
    }
    let mut ret = 0.0;
    for i in 0..v.len() {
        ret += pd.h2[i] * v[i];
    }
    lin + pd.lambda * (ret - pd.rho) * (ret - pd.rho)
}

/// Exact projection of `p` onto `{u : Q u >= q}` by enumerating active
/// sets: for each subset A of constraints, solve the equality-constrained
/// projection through its KKT system and keep the candidate that is primal
/// and dual feasible. Intended for `n2 <= ~12`.
pub fn kkt_projection(q: &[Vec<f64>], rhs: &[f64], p: &[f64]) -> Option<Vec<f64>> {
    let n2 = q.len();
    let n1 = q[0].len();
    assert!(n2 <= 20, "enumeration oracle limited to small systems");
    const PRIMAL_TOL: f64 = 1e-9;
    const DUAL_TOL: f64 = 1e-9;

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u64..(1u64 << n2) {
        let active: Vec<usize> = (0..n2).filter(|i| mask & (1 << i) != 0).collect();
        let k = active.len();
        if k > n1 {
            continue;
        }
        let u = if k == 0 {
            p.to_vec()
        } else {
            // u = p + Q_A^T nu with (Q_A Q_A^T) nu = q_A - Q_A p
            let mut gram = vec![vec![0.0; k]; k];
            let mut rhs_a = vec![0.0; k];
            for (a, &ia) in active.iter().enumerate() {
                for (b, &ib) in active.iter().enumerate() {
                    gram[a][b] = dot(&q[ia], &q[ib]);
                }
                rhs_a[a] = rhs[ia] - dot(&q[ia], p);
            }
            let nu = match solve_dense(&mut gram, &rhs_a) {
                Some(nu) => nu,
                None => continue, // redundant active set
            };
            // dual feasibility: multipliers of >= constraints are nonneg
            if nu.iter().any(|&x| x < -DUAL_TOL) {
                continue;
            }
            let mut u = p.to_vec();
            for (a, &ia) in active.iter().enumerate() {
                for j in 0..n1 {
                    u[j] += q[ia][j] * nu[a];
                }
            }
            u
        };
        // primal feasibility
        let qu = mat_vec(q, &u);
        if qu
            .iter()
            .zip(rhs)
            .any(|(qui, qi)| *qui < qi - PRIMAL_TOL)
        {
            continue;
        }
        let d = norm2(&sub(&u, p));
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, u));
        }
    }
    best.map(|(_, u)| u)
}

/// Gaussian elimination with partial pivoting; `None` on (near) singular.
fn solve_dense(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        x.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= a[col][col];
        for r in 0..col {
            x[r] -= a[r][col] * x[col];
            a[r][col] = 0.0;
        }
    }
    Some(x)
}

/// Student-t survival function by adaptive Simpson quadrature on the
/// density; independent of the incomplete-beta route.
pub fn t_sf_quadrature(t: f64, df: usize) -> f64 {
    let d = df as f64;
    let log_norm = ln_gamma_stirling((d + 1.0) / 2.0)
        - ln_gamma_stirling(d / 2.0)
        - 0.5 * (d * std::f64::consts::PI).ln();
    let pdf = |x: f64| (log_norm - (d + 1.0) / 2.0 * (1.0 + x * x / d).ln()).exp();
    // P(T > t) = 0.5 - integral_0^t pdf for t >= 0
    let (a, b, sign) = if t >= 0.0 {
        (0.0, t, 1.0)
    } else {
        (t, 0.0, -1.0)
    };
    let integral = adaptive_simpson(&pdf, a, b, 1e-12, 40);
    0.5 - sign * integral
}

fn ln_gamma_stirling(x: f64) -> f64 {
    // Stirling series with enough shift for ~1e-12 accuracy at x >= 0.5
    let mut x = x;
    let mut shift = 0.0;
    while x < 12.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    shift
        + 0.5 * ((2.0 * std::f64::consts::PI).ln() - x.ln())
        + x * (x.ln() - 1.0)
        + inv / 12.0 * (1.0 - inv2 / 30.0 * (1.0 - inv2 * 2.0 / 7.0))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, eps, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    if depth == 0 || (left + right - whole).abs() < 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, eps / 2.0, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, eps / 2.0, depth - 1)
    }
}

/// From-scratch simple OLS of `y` on `x` with an intercept: returns
/// `(alpha, beta, t_alpha)` via the 2x2 normal equations.
pub fn ols_intercept_oracle(y: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let alpha = (sxx * sy - sx * sxy) / det;
    let beta = (n * sxy - sx * sy) / det;
    let ssr: f64 = y
        .iter()
        .zip(x)
        .map(|(yi, xi)| {
            let e = yi - alpha - beta * xi;
            e * e
        })
        .sum();
    let s2 = ssr / (n - 2.0);
    let se_alpha = (s2 * sxx / det).sqrt();
    (alpha, beta, alpha / se_alpha)
}

/// Deterministic random window for solver tests: monthly-return-like noise
/// with a drift kept well away from the default return target so the
/// default mixing weight stays finite and moderate.
pub fn random_window(rng: &mut SplitMix64, t: usize, n: usize) -> Window {
    let mut rows = Vec::with_capacity(t);
    for _ in 0..t {
        rows.push(
            (0..n)
                .map(|_| 0.005 + 0.05 * rng.next_normal())
                .collect::<Vec<f64>>(),
        );
    }
    Window {
        r: Matrix::from_rows(rows).expect("rows are rectangular"),
        start_index: 0,
        end_index: t,
    }
}

/// Best exact-budget objective by support enumeration: every m-subset of
/// assets is solved on its restricted asset set with the same machinery
/// (budget equal to the subset size, so the tail penalty is inert) and the
/// full-problem lambda, making `f` directly comparable across supports.
/// `gamma` only tunes the subproblem solves here (the tail penalty is zero
/// on every subset), so a moderate value converges fast without changing
/// the optimum.
pub fn exhaustive_support_optimum(
    window: &Window,
    c: f64,
    rho: f64,
    gamma: f64,
    m: usize,
    lambda_override: Option<f64>,
    cfg: &SolverConfig,
) -> (f64, Vec<usize>) {
    let n = window.r.cols();
    let t = window.r.rows();
    let lambda = lambda_override
        .unwrap_or_else(|| default_lambda(&window.r, c, rho).expect("nondegenerate window"));
    let mut best = (f64::INFINITY, Vec::new());
    let mut support: Vec<usize> = (0..m).collect();
    loop {
        let sub = Window {
            r: window.r.select_cols(&support),
            start_index: window.start_index,
            end_index: window.end_index,
        };
        let pd = assemble(&sub, c, rho, gamma, m, Some(lambda)).expect("valid subproblem");
        let (v0, y0) = default_start(m, t);
        let report = palm_solve(&pd, cfg, &v0, &y0).expect("subproblem solve");
        let f = sparse_cvar::operators::eval_f(&pd, &report.v_final).expect("shapes match");
        if f < best.0 {
            best = (f, support.clone());
        }
        // next lexicographic combination
        let mut i = m;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if support[i] < n - m + i {
                support[i] += 1;
                for j in i + 1..m {
                    support[j] = support[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    best
}
