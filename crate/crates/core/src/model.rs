//! Compact problem data for one window: cost vectors, the implicit
//! constraint matrix, and the Lipschitz constants that set the step sizes.
//!
//! The decision vector is `v = (w, tau, z)` of length `N1 = N + 1 + T`:
//! portfolio weights, the VaR proxy, and the CVaR slack variables. All
//! inequality constraints are gathered into `Q v >= q` with
//!
//! ```text
//!         | R   1_T  I_T |           rows 1..T      z >= -R w - tau 1
//!         | 0    0   I_T |           rows T+1..2T   z >= 0
//!   Q  =  | I_N  0    0  |           next N rows    w >= 0
//!         | 1^T  0    0  |           one row        sum(w) >= 1
//!         |-1^T  0    0  |           one row       -sum(w) >= -1
//! ```
//!
//! so `N2 = 2T + N + 2` and `q = (0_{2T+N}, 1, -1)`. `Q` is never
//! materialized; `apply_q`/`apply_qt` evaluate the blocks directly in
//! O(T N) time.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SpectralEstimate};
use crate::panel::Window;

/// Assembled optimization data for one window. Immutable once built;
/// shareable read-only across concurrent solves.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    /// T x N sample return matrix.
    pub r: Matrix,
    /// Sample mean return per asset, `(1/T) R^T 1`.
    pub mu_hat: Vec<f64>,
    /// `(0_N, 1, 1/((1-c)T) 1_T)`; linear CVaR cost.
    pub h1: Vec<f64>,
    /// `(mu_hat, 0_{1+T})`; linear map onto the portfolio mean.
    pub h2: Vec<f64>,
    /// Right-hand side of the polytope, length `n2`.
    pub q: Vec<f64>,
    /// CVaR confidence level, in (0, 1).
    pub c: f64,
    /// Expected-return target.
    pub rho: f64,
    /// Weight of the squared return-deviation term.
    pub lambda: f64,
    /// Tail-relaxation parameter; smaller is a tighter cardinality budget.
    pub gamma: f64,
    /// Sparsity budget, `1 <= m <= N`.
    pub m: usize,
    /// Decision-vector length `N + 1 + T`.
    pub n1: usize,
    /// Constraint count `2T + N + 2`.
    pub n2: usize,
    /// Lipschitz constant of the v-gradient: `2 lambda |h2|^2 + 1/gamma`.
    pub l1: f64,
    /// Lipschitz constant of the y-gradient: `1/gamma`.
    pub l2: f64,
    /// Power-iteration estimate of the squared spectral norm of `Q`.
    pub q_norm_sq: f64,
}

impl ProblemData {
    #[inline]
    pub fn n_assets(&self) -> usize {
        self.r.cols()
    }

    #[inline]
    pub fn n_periods(&self) -> usize {
        self.r.rows()
    }
}

/// Default mixing weight `1 / ((1-c) sqrt(T) (r_bar - rho)^2)` where `r_bar`
/// is the mean over all entries of the window return matrix.
pub fn default_lambda(r: &Matrix, c: f64, rho: f64) -> Result<f64> {
    let t = r.rows();
    if t == 0 {
        return Err(Error::Shape("empty return matrix".into()));
    }
    let mut sum = 0.0;
    for x in r.data() {
        sum += x;
    }
    let r_bar = sum / r.data().len() as f64;
    let dev = r_bar - rho;
    if dev == 0.0 {
        return Err(Error::Degenerate(
            "mean return equals rho; default lambda is undefined".into(),
        ));
    }
    Ok(1.0 / ((1.0 - c) * crate::fmath::sqrt(t as f64) * dev * dev))
}

/// Seed used by [`assemble`] for its internal spectral-norm estimate so the
/// assembly itself stays deterministic.
pub const ASSEMBLE_SPECTRAL_SEED: u64 = 0;

pub fn assemble(
    window: &Window,
    c: f64,
    rho: f64,
    gamma: f64,
    m: usize,
    lambda_override: Option<f64>,
) -> Result<ProblemData> {
    let t = window.r.rows();
    let n = window.r.cols();
    if t == 0 {
        return Err(Error::Shape("degenerate window: zero periods".into()));
    }
    if !(0.0 < c && c < 1.0) {
        return Err(Error::Param(format!("confidence level {c} outside (0, 1)")));
    }
    if gamma <= 0.0 {
        return Err(Error::Param(format!("gamma {gamma} must be positive")));
    }
    if m == 0 || m > n {
        return Err(Error::Param(format!(
            "sparsity budget {m} outside 1..={n}"
        )));
    }

    let mut mu_hat = vec![0.0; n];
    for i in 0..t {
        for (mu, &r) in mu_hat.iter_mut().zip(window.r.row(i)) {
            *mu += r;
        }
    }
    for mu in &mut mu_hat {
        *mu /= t as f64;
    }

    let n1 = n + 1 + t;
    let n2 = 2 * t + n + 2;

    let mut h1 = vec![0.0; n1];
    h1[n] = 1.0;
    let tail_cost = 1.0 / ((1.0 - c) * t as f64);
    for x in &mut h1[n + 1..] {
        *x = tail_cost;
    }

    let mut h2 = vec![0.0; n1];
    h2[..n].copy_from_slice(&mu_hat);

    let mut q = vec![0.0; n2];
    q[n2 - 2] = 1.0;
    q[n2 - 1] = -1.0;

    let lambda = match lambda_override {
        Some(l) => {
            if l < 0.0 {
                return Err(Error::Param(format!("lambda {l} must be nonnegative")));
            }
            l
        }
        None => default_lambda(&window.r, c, rho)?,
    };

    let l1 = 2.0 * lambda * linalg::norm2_sq(&h2) + 1.0 / gamma;
    let l2 = 1.0 / gamma;

    let mut pd = ProblemData {
        r: window.r.clone(),
        mu_hat,
        h1,
        h2,
        q,
        c,
        rho,
        lambda,
        gamma,
        m,
        n1,
        n2,
        l1,
        l2,
        q_norm_sq: 0.0,
    };
    pd.q_norm_sq = spectral_norm_sq(&pd, ASSEMBLE_SPECTRAL_SEED).value;
    Ok(pd)
}

/// `out = Q v`, computed blockwise. Lengths are the caller's responsibility.
pub(crate) fn apply_q_into(pd: &ProblemData, v: &[f64], out: &mut [f64]) {
    let n = pd.n_assets();
    let t = pd.n_periods();
    let (w, rest) = v.split_at(n);
    let tau = rest[0];
    let z = &rest[1..];

    let mut w_sum = 0.0;
    for &x in w {
        w_sum += x;
    }
    for i in 0..t {
        out[i] = linalg::dot(pd.r.row(i), w) + tau + z[i];
        out[t + i] = z[i];
    }
    out[2 * t..2 * t + n].copy_from_slice(w);
    out[2 * t + n] = w_sum;
    out[2 * t + n + 1] = -w_sum;
}

/// `out = Q^T u`.
pub(crate) fn apply_qt_into(pd: &ProblemData, u: &[f64], out: &mut [f64]) {
    let n = pd.n_assets();
    let t = pd.n_periods();
    let a = &u[..t];
    let b = &u[t..2 * t];
    let c = &u[2 * t..2 * t + n];
    let d = u[2 * t + n];
    let e = u[2 * t + n + 1];

    let de = d - e;
    for j in 0..n {
        out[j] = c[j] + de;
    }
    let mut a_sum = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        a_sum += ai;
        let row = pd.r.row(i);
        for (oj, &rij) in out[..n].iter_mut().zip(row) {
            *oj += ai * rij;
        }
    }
    out[n] = a_sum;
    for i in 0..t {
        out[n + 1 + i] = a[i] + b[i];
    }
}

/// Product with the constraint matrix without materializing it.
pub fn apply_q(pd: &ProblemData, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != pd.n1 {
        return Err(Error::Shape(format!(
            "vector length {} does not match n1 = {}",
            v.len(),
            pd.n1
        )));
    }
    let mut out = vec![0.0; pd.n2];
    apply_q_into(pd, v, &mut out);
    Ok(out)
}

/// Product with the transposed constraint matrix.
pub fn apply_qt(pd: &ProblemData, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != pd.n2 {
        return Err(Error::Shape(format!(
            "vector length {} does not match n2 = {}",
            u.len(),
            pd.n2
        )));
    }
    let mut out = vec![0.0; pd.n1];
    apply_qt_into(pd, u, &mut out);
    Ok(out)
}

/// First 2T rows of `Q` only (the CVaR block).
pub(crate) fn apply_qtilde_into(pd: &ProblemData, v: &[f64], out: &mut [f64]) {
    let n = pd.n_assets();
    let t = pd.n_periods();
    let (w, rest) = v.split_at(n);
    let tau = rest[0];
    let z = &rest[1..];
    for i in 0..t {
        out[i] = linalg::dot(pd.r.row(i), w) + tau + z[i];
        out[t + i] = z[i];
    }
}

pub(crate) fn apply_qtilde_t_into(pd: &ProblemData, u: &[f64], out: &mut [f64]) {
    let n = pd.n_assets();
    let t = pd.n_periods();
    let a = &u[..t];
    let b = &u[t..2 * t];
    out[..pd.n1].fill(0.0);
    let mut a_sum = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        a_sum += ai;
        let row = pd.r.row(i);
        for (oj, &rij) in out[..n].iter_mut().zip(row) {
            *oj += ai * rij;
        }
    }
    out[n] = a_sum;
    for i in 0..t {
        out[n + 1 + i] = a[i] + b[i];
    }
}

/// Squared spectral norm of `Q`, via power iteration on `v -> Q^T (Q v)`.
/// Deterministic for a fixed seed. When the cap is reached the best estimate
/// is returned with `converged = false`; the inflation factor keeps
/// `1.99 / value` a safe step even then.
pub fn spectral_norm_sq(pd: &ProblemData, seed: u64) -> SpectralEstimate {
    let mut buf = vec![0.0; pd.n2];
    linalg::largest_eigenvalue_sym(pd.n1, seed, |v, out| {
        apply_q_into(pd, v, &mut buf);
        apply_qt_into(pd, &buf, out);
    })
}

/// Squared spectral norm of the CVaR block (first 2T rows of `Q`).
pub fn spectral_norm_sq_qtilde(pd: &ProblemData, seed: u64) -> SpectralEstimate {
    let mut buf = vec![0.0; 2 * pd.n_periods()];
    linalg::largest_eigenvalue_sym(pd.n1, seed, |v, out| {
        apply_qtilde_into(pd, v, &mut buf);
        apply_qtilde_t_into(pd, &buf, out);
    })
}
