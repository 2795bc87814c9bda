//! Proximity and thresholding operators plus the objective pieces used by
//! the solver: the box prox, the keep-m-largest threshold, the tailed
//! cardinality penalty, and `f`, `H`, `G`, `Psi` with the partial gradients
//! of `H`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::model::{self, ProblemData};

/// Feasibility slack used when evaluating the polytope indicator in
/// diagnostics; the solver itself never scores infeasible points.
pub const FEASIBILITY_EPS: f64 = 1e-9;

/// Decision vector `(w, tau, z)` with checked part lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVector {
    v: Vec<f64>,
    n: usize,
    t: usize,
}

impl SplitVector {
    pub fn new(v: Vec<f64>, n: usize, t: usize) -> Result<Self> {
        if v.len() != n + 1 + t {
            return Err(Error::Shape(format!(
                "vector length {} does not match n + 1 + t = {}",
                v.len(),
                n + 1 + t
            )));
        }
        Ok(SplitVector { v, n, t })
    }

    pub fn from_parts(w: &[f64], tau: f64, z: &[f64]) -> Self {
        let mut v = Vec::with_capacity(w.len() + 1 + z.len());
        v.extend_from_slice(w);
        v.push(tau);
        v.extend_from_slice(z);
        SplitVector {
            v,
            n: w.len(),
            t: z.len(),
        }
    }

    /// Default solver start `((1/N) 1_N, 0_{1+T})`.
    pub fn uniform_start(n: usize, t: usize) -> Self {
        let mut v = vec![0.0; n + 1 + t];
        for x in &mut v[..n] {
            *x = 1.0 / n as f64;
        }
        SplitVector { v, n, t }
    }

    #[inline]
    pub fn w(&self) -> &[f64] {
        &self.v[..self.n]
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.v[self.n]
    }

    #[inline]
    pub fn z(&self) -> &[f64] {
        &self.v[self.n + 1..]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.v
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.v
    }
}

/// Componentwise `max(x, q)`: the proximity operator of the indicator of
/// `{u : u >= q}`.
pub fn prox_box(x: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    if x.len() != q.len() {
        return Err(Error::Shape(format!(
            "prox_box length mismatch: {} vs {}",
            x.len(),
            q.len()
        )));
    }
    Ok(x.iter().zip(q).map(|(&xi, &qi)| xi.max(qi)).collect())
}

/// Indices of the `m` largest-absolute-value components, ties broken toward
/// the lowest index. The leading entry is the overall largest.
pub fn m_lav_indices(w: &[f64], m: usize) -> Result<Vec<usize>> {
    if m == 0 || m > w.len() {
        return Err(Error::Param(format!(
            "m = {m} outside 1..={}",
            w.len()
        )));
    }
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_unstable_by(|&a, &b| {
        fmath::abs(w[b])
            .partial_cmp(&fmath::abs(w[a]))
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.cmp(&b))
    });
    idx.truncate(m);
    Ok(idx)
}

/// Keep the m-largest-absolute-value components, zero the rest.
pub fn hard_threshold_m(w: &[f64], m: usize) -> Result<Vec<f64>> {
    let keep = m_lav_indices(w, m)?;
    let mut out = vec![0.0; w.len()];
    for &j in &keep {
        out[j] = w[j];
    }
    Ok(out)
}

/// Tailed relaxation of the m-sparse indicator: zero inside the budget,
/// `1/(2 gamma)` times the squared tail mass outside. Always equals
/// `|w - hard_threshold_m(w, m)|^2 / (2 gamma)`.
pub fn tailed_indicator(w: &[f64], m: usize, gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::Param(format!("gamma {gamma} must be positive")));
    }
    let kept = hard_threshold_m(w, m)?;
    Ok(tail_sq(w, &kept) / (2.0 * gamma))
}

#[inline]
fn tail_sq(w: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in w.iter().zip(y) {
        let d = a - b;
        s += d * d;
    }
    s
}

/// `f(v) = h1^T v + lambda (h2^T v - rho)^2`.
pub fn eval_f(pd: &ProblemData, v: &[f64]) -> Result<f64> {
    check_v(pd, v)?;
    let lin = crate::linalg::dot(&pd.h1, v);
    let dev = crate::linalg::dot(&pd.h2, v) - pd.rho;
    Ok(lin + pd.lambda * dev * dev)
}

/// `H(v, y) = f(v) + |I~ v - y|^2 / (2 gamma)`; the smooth coupling of the
/// two-block surrogate.
pub fn eval_h(pd: &ProblemData, v: &[f64], y: &[f64]) -> Result<f64> {
    check_v(pd, v)?;
    check_y(pd, y)?;
    let w = &v[..pd.n_assets()];
    Ok(eval_f(pd, v)? + tail_sq(w, y) / (2.0 * pd.gamma))
}

/// `grad_v H = h1 + 2 lambda (h2^T v - rho) h2 + (1/gamma) lift(w - y)`.
pub fn grad_v_h(pd: &ProblemData, v: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_v(pd, v)?;
    check_y(pd, y)?;
    let mut g = vec![0.0; pd.n1];
    grad_v_h_into(pd, v, y, &mut g);
    Ok(g)
}

pub(crate) fn grad_v_h_into(pd: &ProblemData, v: &[f64], y: &[f64], out: &mut [f64]) {
    let n = pd.n_assets();
    let scale = 2.0 * pd.lambda * (crate::linalg::dot(&pd.h2, v) - pd.rho);
    let inv_gamma = 1.0 / pd.gamma;
    for (o, (h1i, h2i)) in out.iter_mut().zip(pd.h1.iter().zip(&pd.h2)) {
        *o = h1i + scale * h2i;
    }
    for j in 0..n {
        out[j] += inv_gamma * (v[j] - y[j]);
    }
}

/// `grad_y H = (1/gamma) (y - I~ v)`.
pub fn grad_y_h(pd: &ProblemData, v: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_v(pd, v)?;
    check_y(pd, y)?;
    let inv_gamma = 1.0 / pd.gamma;
    Ok(y.iter()
        .zip(&v[..pd.n_assets()])
        .map(|(yi, wi)| inv_gamma * (yi - wi))
        .collect())
}

/// Worst violation of `Q v >= q`: the infinity norm of `max(q - Qv, 0)`.
pub fn feasibility_violation(pd: &ProblemData, v: &[f64]) -> Result<f64> {
    let qv = model::apply_q(pd, v)?;
    let mut worst = 0.0f64;
    for (qi, qvi) in pd.q.iter().zip(&qv) {
        worst = worst.max(qi - qvi);
    }
    Ok(worst)
}

fn indicator_polytope(pd: &ProblemData, v: &[f64]) -> Result<f64> {
    Ok(if feasibility_violation(pd, v)? > FEASIBILITY_EPS {
        f64::INFINITY
    } else {
        0.0
    })
}

fn indicator_sparsity(y: &[f64], m: usize) -> f64 {
    let nnz = y.iter().filter(|x| x.abs() > 0.0).count();
    if nnz <= m { 0.0 } else { f64::INFINITY }
}

/// Surrogate objective `G(v, y) = H(v, y) + iota_q(Qv) + iota_m(y)`.
/// Infinity is a value here, not an error.
pub fn eval_g(pd: &ProblemData, v: &[f64], y: &[f64]) -> Result<f64> {
    Ok(eval_h(pd, v, y)? + indicator_polytope(pd, v)? + indicator_sparsity(y, pd.m))
}

/// Relaxed objective `Psi(v) = f(v) + iota_q(Qv) + tailed(I~ v)`.
pub fn eval_psi(pd: &ProblemData, v: &[f64]) -> Result<f64> {
    check_v(pd, v)?;
    let w = &v[..pd.n_assets()];
    let tail = tailed_indicator(w, pd.m, pd.gamma)?;
    Ok(eval_f(pd, v)? + tail + indicator_polytope(pd, v)?)
}

fn check_v(pd: &ProblemData, v: &[f64]) -> Result<()> {
    if v.len() != pd.n1 {
        return Err(Error::Shape(format!(
            "v has length {}, expected n1 = {}",
            v.len(),
            pd.n1
        )));
    }
    Ok(())
}

fn check_y(pd: &ProblemData, y: &[f64]) -> Result<()> {
    if y.len() != pd.n_assets() {
        return Err(Error::Shape(format!(
            "y has length {}, expected N = {}",
            y.len(),
            pd.n_assets()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::assemble;
    use crate::panel::Window;
    use alloc::vec;
    use proptest::prelude::*;

    fn toy_pd(lambda: f64) -> ProblemData {
        let w = Window {
            r: Matrix::from_rows(vec![vec![0.01, 0.02], vec![0.03, -0.01]]).unwrap(),
            start_index: 0,
            end_index: 2,
        };
        assemble(&w, 0.95, 0.02, 0.5, 1, Some(lambda)).unwrap()
    }

    #[test]
    fn prox_box_is_componentwise_max() {
        assert_eq!(
            prox_box(&[-1.0, 2.0], &[0.0, -1.0]).unwrap(),
            vec![0.0, 2.0]
        );
        let x = [0.5, 3.0];
        assert_eq!(prox_box(&x, &[0.0, 0.0]).unwrap(), x.to_vec());
        let q = [1.0, -2.0];
        assert_eq!(prox_box(&q, &q).unwrap(), q.to_vec());
        assert!(prox_box(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(
            hard_threshold_m(&[3.0, -1.0, 2.0], 2).unwrap(),
            vec![3.0, 0.0, 2.0]
        );
        let w = [0.4, -0.2, 0.1];
        assert_eq!(hard_threshold_m(&w, 3).unwrap(), w.to_vec());
        // ties keep the lowest index
        assert_eq!(
            hard_threshold_m(&[1.0, 1.0, 1.0], 2).unwrap(),
            vec![1.0, 1.0, 0.0]
        );
        assert!(hard_threshold_m(&w, 0).is_err());
        assert!(hard_threshold_m(&w, 4).is_err());
    }

    #[test]
    fn tailed_indicator_examples() {
        // tail is the single smallest component: 0.1^2 / (2 * 0.05) = 0.1
        let v = tailed_indicator(&[0.6, 0.3, 0.1], 2, 0.05).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        // inside the budget the penalty vanishes
        assert_eq!(tailed_indicator(&[0.0, 0.7, 0.0, 0.3], 2, 0.05).unwrap(), 0.0);
        // halving gamma doubles the value
        let a = tailed_indicator(&[0.5, 0.3, 0.2, 0.1], 2, 0.02).unwrap();
        let b = tailed_indicator(&[0.5, 0.3, 0.2, 0.1], 2, 0.01).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn eval_f_closed_forms() {
        let pd = toy_pd(0.0);
        let v = vec![0.0; pd.n1];
        assert_eq!(eval_f(&pd, &v).unwrap(), 0.0);

        // with lambda > 0 and h2^T v = rho the quadratic vanishes
        let pd = toy_pd(7.0);
        // choose w so that mu_hat . w = rho: put all mass where mu > 0
        let mu = pd.mu_hat.clone();
        let w0 = pd.rho / mu[0];
        let v = SplitVector::from_parts(&[w0, 0.0], 0.3, &[0.1, 0.2]);
        let f = eval_f(&pd, v.as_slice()).unwrap();
        let h1v = crate::linalg::dot(&pd.h1, v.as_slice());
        assert!((f - h1v).abs() < 1e-12);
    }

    #[test]
    fn grad_y_closed_form() {
        let pd = toy_pd(1.0);
        // gamma = 0.5, y = (1, 0), I~v = (0, 0) -> grad_y = (2, 0)
        let v = vec![0.0; pd.n1];
        let g = grad_y_h(&pd, &v, &[1.0, 0.0]).unwrap();
        assert_eq!(g, vec![2.0, 0.0]);
        // y = I~v kills the coupling
        let v = SplitVector::from_parts(&[0.3, 0.7], 0.0, &[0.0, 0.0]);
        let g = grad_y_h(&pd, v.as_slice(), &[0.3, 0.7]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let h = eval_h(&pd, v.as_slice(), &[0.3, 0.7]).unwrap();
        let f = eval_f(&pd, v.as_slice()).unwrap();
        assert_eq!(h, f);
    }

    #[test]
    fn surrogate_indicators() {
        let pd = toy_pd(1.0);
        // y with too many nonzeros scores infinity
        let v = SplitVector::uniform_start(2, 2);
        let g = eval_g(&pd, v.as_slice(), &[0.5, 0.5]).unwrap();
        assert!(g.is_infinite()); // m = 1
        // infeasible v scores infinity in Psi
        let bad = SplitVector::from_parts(&[-1.0, 0.0], 0.0, &[0.0, 0.0]);
        assert!(eval_psi(&pd, bad.as_slice()).unwrap().is_infinite());
    }

    #[test]
    fn theorem_identity_g_equals_psi_on_thresholded_y() {
        let pd = toy_pd(2.5);
        let vs = [
            SplitVector::from_parts(&[0.6, 0.4], 0.05, &[0.0, 0.01]),
            SplitVector::from_parts(&[1.0, 0.0], -0.2, &[0.3, 0.0]),
            SplitVector::from_parts(&[0.2, 0.8], 0.0, &[0.5, 0.5]),
        ];
        for v in &vs {
            let y = hard_threshold_m(v.w(), pd.m).unwrap();
            let g = eval_g(&pd, v.as_slice(), &y).unwrap();
            let psi = eval_psi(&pd, v.as_slice()).unwrap();
            // exact identity, not approximate
            assert_eq!(g.to_bits(), psi.to_bits());
        }
    }

    #[test]
    fn split_vector_layout() {
        let sv = SplitVector::from_parts(&[0.1, 0.9], 0.3, &[1.0, 2.0, 3.0]);
        assert_eq!(sv.w(), &[0.1, 0.9]);
        assert_eq!(sv.tau(), 0.3);
        assert_eq!(sv.z(), &[1.0, 2.0, 3.0]);
        assert!(SplitVector::new(vec![0.0; 4], 2, 2).is_err());
        let u = SplitVector::uniform_start(4, 3);
        assert_eq!(u.w(), &[0.25; 4]);
        assert_eq!(u.tau(), 0.0);
        assert_eq!(u.z(), &[0.0; 3]);
    }

    proptest! {
        #[test]
        fn threshold_is_idempotent(w in proptest::collection::vec(-1.0f64..1.0, 1..12), m in 1usize..12) {
            let m = m.min(w.len());
            let once = hard_threshold_m(&w, m).unwrap();
            let twice = hard_threshold_m(&once, m).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn threshold_is_best_m_term(
            w in proptest::collection::vec(-1.0f64..1.0, 2..10),
            pick in proptest::collection::vec(0usize..10, 1..5),
        ) {
            let m = pick.len().min(w.len());
            let sm = hard_threshold_m(&w, m).unwrap();
            // arbitrary competitor with support of size <= m
            let mut y = vec![0.0; w.len()];
            for &p in pick.iter().take(m) {
                let j = p % w.len();
                y[j] = w[j];
            }
            let d_sm: f64 = sm.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_y: f64 = y.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!(d_sm <= d_y + 1e-15);
        }

        #[test]
        fn tail_penalty_is_monotone_in_gamma(
            w in proptest::collection::vec(-1.0f64..1.0, 3..10),
            g1 in 1e-6f64..1.0,
            scale in 1.001f64..100.0,
        ) {
            let m = 2.min(w.len());
            let tight = tailed_indicator(&w, m, g1).unwrap();
            let loose = tailed_indicator(&w, m, g1 * scale).unwrap();
            prop_assert!(tight >= loose);
        }

        #[test]
        fn prox_box_dominates_bounds(
            pairs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let q: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let p = prox_box(&x, &q).unwrap();
            for ((pi, xi), qi) in p.iter().zip(&x).zip(&q) {
                prop_assert!(pi >= qi);
                prop_assert!(*pi == *xi || *pi == *qi);
            }
        }
    }
}
