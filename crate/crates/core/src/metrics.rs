//! Evaluation statistics: Sharpe ratio, CAPM alpha with a right-tailed
//! t-test, and the support-overlap statistic across sparsity budgets.
//!
//! All sample moments use the unbiased (length - 1) denominator. The
//! Student-t survival function is computed in-crate through the
//! regularized incomplete beta (Lentz continued fraction), so results are
//! bit-reproducible with no statistics dependency.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Monthly Sharpe ratio `(mean(r) - r_f) / std(r)`.
pub fn sharpe_ratio(returns: &[f64], r_f: f64) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::Param(format!(
            "sharpe ratio needs at least 2 returns, got {}",
            returns.len()
        )));
    }
    let m = mean(returns);
    let sd = fmath::sqrt(sample_var(returns, m));
    if sd == 0.0 {
        return Err(Error::Degenerate(
            "zero return variance; sharpe ratio undefined".into(),
        ));
    }
    Ok((m - r_f) / sd)
}

/// CAPM regression of strategy returns on market returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapmEstimate {
    pub alpha: f64,
    pub beta: f64,
    /// t statistic of the intercept (simple-OLS standard error,
    /// length - 2 residual degrees of freedom).
    pub t_stat: f64,
    /// Right-tailed p-value for alpha > 0.
    pub pvalue: f64,
}

pub fn capm_alpha(r_s: &[f64], r_m: &[f64]) -> Result<CapmEstimate> {
    let t = r_s.len();
    if t != r_m.len() {
        return Err(Error::Shape(format!(
            "return series lengths differ: {t} vs {}",
            r_m.len()
        )));
    }
    if t < 3 {
        return Err(Error::Param(format!(
            "alpha regression needs at least 3 periods, got {t}"
        )));
    }
    let ms = mean(r_s);
    let mm = mean(r_m);
    let mut cov = 0.0;
    let mut sxx = 0.0;
    for (s, m) in r_s.iter().zip(r_m) {
        cov += (s - ms) * (m - mm);
        sxx += (m - mm) * (m - mm);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate(
            "market returns have zero variance".into(),
        ));
    }
    let beta = cov / sxx;
    let alpha = ms - beta * mm;

    let mut ssr = 0.0;
    for (s, m) in r_s.iter().zip(r_m) {
        let e = s - alpha - beta * m;
        ssr += e * e;
    }
    let s2 = ssr / (t - 2) as f64;
    let se = fmath::sqrt(s2 * (1.0 / t as f64 + mm * mm / sxx));
    let t_stat = if se == 0.0 {
        // perfect fit: the intercept is known exactly
        if alpha == 0.0 {
            0.0
        } else if alpha > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        alpha / se
    };
    let pvalue = student_t_sf(t_stat, t - 2);
    Ok(CapmEstimate {
        alpha,
        beta,
        t_stat,
        pvalue,
    })
}

/// Right tail `P(T > t)` of the Student-t distribution with `df` degrees of
/// freedom. Exactly 0.5 at t = 0.
pub fn student_t_sf(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let d = df as f64;
    let x = d / (d + t * t);
    let half_tail = 0.5 * reg_inc_beta(0.5 * d, 0.5, x);
    if t >= 0.0 { half_tail } else { 1.0 - half_tail }
}

/// ln Gamma via the Lanczos approximation (g = 7, 9 coefficients).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    // reflection not needed: callers use x > 0
    let x = x - 1.0;
    let mut a = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        a += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * fmath::ln(2.0 * core::f64::consts::PI) + (x + 0.5) * fmath::ln(t) - t + fmath::ln(a)
}

/// Regularized incomplete beta `I_x(a, b)` by the modified Lentz continued
/// fraction, with the symmetry transform for the fast-converging side.
fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        fmath::exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * fmath::ln(x)
            + b * fmath::ln(1.0 - x));
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fmath::abs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fmath::abs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fmath::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fmath::abs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fmath::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fmath::abs(delta - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Per-period overlap proportions between two support sequences:
/// `|a_t intersect b_t| / |a_t|`, with sample mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSeries {
    /// One entry per period; `None` where the numerator-side support was
    /// empty (excluded from the moments).
    pub series: Vec<Option<f64>>,
    pub mean: f64,
    pub std: f64,
    /// Count of excluded periods.
    pub skipped: usize,
}

/// Supports must be sorted ascending (the portfolio type guarantees this).
pub fn overlap_series(
    supports_a: &[Vec<usize>],
    supports_b: &[Vec<usize>],
) -> Result<OverlapSeries> {
    if supports_a.len() != supports_b.len() {
        return Err(Error::Shape(format!(
            "support list lengths differ: {} vs {}",
            supports_a.len(),
            supports_b.len()
        )));
    }
    let mut series = Vec::with_capacity(supports_a.len());
    let mut valid = Vec::new();
    let mut skipped = 0;
    for (a, b) in supports_a.iter().zip(supports_b) {
        if a.is_empty() {
            series.push(None);
            skipped += 1;
            continue;
        }
        let inter = sorted_intersection_count(a, b);
        let p = inter as f64 / a.len() as f64;
        series.push(Some(p));
        valid.push(p);
    }
    if valid.len() < 2 {
        return Err(Error::Degenerate(format!(
            "overlap statistics need at least 2 valid periods, got {}",
            valid.len()
        )));
    }
    let m = mean(&valid);
    let sd = fmath::sqrt(sample_var(&valid, m));
    Ok(OverlapSeries {
        series,
        mean: m,
        std: sd,
        skipped,
    })
}

fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Headline numbers for one backtest run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub final_wealth: f64,
    pub sharpe: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_pvalue: f64,
}

pub fn metric_report(result: &crate::backtest::BacktestResult) -> Result<MetricReport> {
    let sharpe = sharpe_ratio(&result.period_returns, 0.0)?;
    let capm = capm_alpha(&result.period_returns, &result.market_returns)?;
    Ok(MetricReport {
        final_wealth: result.final_wealth(),
        sharpe,
        alpha: capm.alpha,
        beta: capm.beta,
        alpha_pvalue: capm.pvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sharpe_examples() {
        // zero mean
        assert_eq!(sharpe_ratio(&[0.1, -0.1], 0.0).unwrap(), 0.0);
        // hand arithmetic: mean 0.03, std sqrt(2e-4)
        let sr = sharpe_ratio(&[0.02, 0.04], 0.0).unwrap();
        assert!((sr - 0.03 / 0.0002f64.sqrt()).abs() < 1e-12);
        assert!((sr - 2.1213203435596424).abs() < 1e-12);
        // degenerate variance
        assert!(matches!(
            sharpe_ratio(&[0.01, 0.01, 0.01], 0.0),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(sharpe_ratio(&[0.01], 0.0), Err(Error::Param(_))));
    }

    #[test]
    fn capm_identity_series() {
        let r = [0.01, -0.02, 0.03, 0.005, -0.01];
        let est = capm_alpha(&r, &r).unwrap();
        assert_eq!(est.beta, 1.0);
        assert_eq!(est.alpha, 0.0);
        assert_eq!(est.t_stat, 0.0);
        assert_eq!(est.pvalue, 0.5);
    }

    #[test]
    fn capm_rejects_degenerate_market() {
        let r = [0.01, -0.02, 0.03];
        assert!(matches!(
            capm_alpha(&r, &[0.01, 0.01, 0.01]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(capm_alpha(&r, &r[..2]), Err(Error::Shape(_))));
        assert!(matches!(
            capm_alpha(&r[..2], &r[..2]),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn capm_scale_invariance_of_alpha() {
        // scaling the market by k divides beta by k and keeps alpha fixed
        let r_s = [0.02, -0.01, 0.03, 0.00, 0.015, -0.02];
        let r_m = [0.01, -0.02, 0.025, 0.005, 0.01, -0.015];
        let base = capm_alpha(&r_s, &r_m).unwrap();
        for k in [2.0, 5.0, 0.3] {
            let scaled: Vec<f64> = r_m.iter().map(|x| k * x).collect();
            let est = capm_alpha(&r_s, &scaled).unwrap();
            assert!((est.beta - base.beta / k).abs() < 1e-10);
            assert!((est.alpha - base.alpha).abs() < 1e-10);
        }
    }

    #[test]
    fn t_sf_is_half_at_zero_and_decreasing() {
        for df in [1, 2, 5, 30, 100] {
            assert_eq!(student_t_sf(0.0, df), 0.5);
            let mut prev = 1.0;
            for i in 0..80 {
                let t = -4.0 + i as f64 * 0.1;
                let p = student_t_sf(t, df);
                assert!(p < prev, "sf not strictly decreasing at t = {t}, df = {df}");
                assert!((0.0..=1.0).contains(&p));
                prev = p;
            }
        }
        assert_eq!(student_t_sf(f64::INFINITY, 5), 0.0);
        assert_eq!(student_t_sf(f64::NEG_INFINITY, 5), 1.0);
    }

    #[test]
    fn t_sf_known_values() {
        // P(T > t) for t at the classical two-sided 5% critical points
        assert!((student_t_sf(12.706, 1) - 0.025).abs() < 1e-4);
        assert!((student_t_sf(2.228, 10) - 0.025).abs() < 1e-4);
        // large df approaches the normal tail
        assert!((student_t_sf(1.959964, 100_000) - 0.025).abs() < 1e-5);
    }

    #[test]
    fn overlap_examples() {
        // {1,2,3} vs {2,3,4,5} -> 2/3
        let a = vec![vec![1, 2, 3], vec![0, 1]];
        let b = vec![vec![2, 3, 4, 5], vec![0, 1]];
        let o = overlap_series(&a, &b).unwrap();
        assert!((o.series[0].unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(o.series[1], Some(1.0));
        assert_eq!(o.skipped, 0);

        // identical supports every period
        let s = vec![vec![3, 7], vec![3, 7], vec![3, 7]];
        let o = overlap_series(&s, &s).unwrap();
        assert_eq!(o.mean, 1.0);
        assert_eq!(o.std, 0.0);

        // empty numerator-side support is excluded with a count
        let a = vec![vec![], vec![0], vec![1]];
        let b = vec![vec![0], vec![0], vec![1]];
        let o = overlap_series(&a, &b).unwrap();
        assert_eq!(o.skipped, 1);
        assert_eq!(o.series[0], None);
    }
}
