//! Dated asset-return panel and moving-window slicing.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Immutable panel of simple monthly returns: one row per month stamp
/// (YYYYMM), one column per asset. Returns are dimensionless
/// (0.0123 = +1.23%); callers convert percent data before construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<u32>,
    assets: Vec<String>,
    returns: Matrix,
}

impl ReturnPanel {
    pub fn new(dates: Vec<u32>, assets: Vec<String>, returns: Matrix) -> Result<Self> {
        if assets.len() < 2 {
            return Err(Error::Shape(format!(
                "panel needs at least 2 assets, got {}",
                assets.len()
            )));
        }
        if dates.is_empty() {
            return Err(Error::Shape("panel needs at least one period".into()));
        }
        if returns.rows() != dates.len() || returns.cols() != assets.len() {
            return Err(Error::Shape(format!(
                "return matrix is {}x{}, expected {}x{}",
                returns.rows(),
                returns.cols(),
                dates.len(),
                assets.len()
            )));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Data(format!(
                    "dates must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, &d) in dates.iter().enumerate() {
            for (j, &r) in returns.row(i).iter().enumerate() {
                if !r.is_finite() {
                    return Err(Error::Data(format!(
                        "non-finite return {r} at date {d}, asset {}",
                        assets[j]
                    )));
                }
                let _ = j;
            }
        }
        Ok(ReturnPanel {
            dates,
            assets,
            returns,
        })
    }

    #[inline]
    pub fn n_periods(&self) -> usize {
        self.dates.len()
    }

    #[inline]
    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    #[inline]
    pub fn dates(&self) -> &[u32] {
        &self.dates
    }

    #[inline]
    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    #[inline]
    pub fn returns(&self) -> &Matrix {
        &self.returns
    }

    /// Return row for 1-based trade period `t`.
    #[inline]
    pub fn period_returns(&self, t: usize) -> &[f64] {
        self.returns.row(t - 1)
    }

    /// Sub-panel covering the inclusive date range `[from, to]`.
    pub fn restrict_dates(&self, from: u32, to: u32) -> Result<ReturnPanel> {
        let start = self.dates.iter().position(|&d| d >= from);
        let end = self.dates.iter().rposition(|&d| d <= to);
        match (start, end) {
            (Some(s), Some(e)) if s <= e => ReturnPanel::new(
                self.dates[s..=e].to_vec(),
                self.assets.clone(),
                self.returns.slice_rows(s, e + 1),
            ),
            _ => Err(Error::Data(format!(
                "no panel rows in date range {from}..{to}"
            ))),
        }
    }
}

/// One moving window: the sample return matrix for a trade decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// T x N sample return matrix.
    pub r: Matrix,
    /// First panel row (0-based) included in the window.
    pub start_index: usize,
    /// One past the last included row; equals the 0-based row of the trade
    /// period itself.
    pub end_index: usize,
}

/// Outcome of slicing at a trade index: either a full window or a marker
/// that there is not enough history yet (callers fall back to 1/N).
#[derive(Debug, Clone, PartialEq)]
pub enum WindowSlice {
    Ready(Window),
    Insufficient,
}

/// Window of length `window_len` ending just before 1-based trade index `t`,
/// i.e. panel rows `[t - window_len, t - 1]` in 1-based terms.
pub fn slice_window(panel: &ReturnPanel, t: usize, window_len: usize) -> Result<WindowSlice> {
    if t == 0 || t > panel.n_periods() {
        return Err(Error::Param(format!(
            "trade index {t} outside 1..={}",
            panel.n_periods()
        )));
    }
    if window_len == 0 {
        return Err(Error::Param("window length must be at least 1".into()));
    }
    if t <= window_len {
        return Ok(WindowSlice::Insufficient);
    }
    let start = t - 1 - window_len;
    let end = t - 1;
    Ok(WindowSlice::Ready(Window {
        r: panel.returns().slice_rows(start, end),
        start_index: start,
        end_index: end,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn panel(rows: usize) -> ReturnPanel {
        let dates: Vec<u32> = (0..rows as u32).map(|i| 200001 + i).collect();
        let data: Vec<f64> = (0..rows * 2).map(|k| k as f64 * 0.001).collect();
        ReturnPanel::new(
            dates,
            vec!["a".to_string(), "b".to_string()],
            Matrix::from_flat(rows, 2, data).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn slice_uses_the_t_minus_window_rows() {
        let p = panel(70);
        match slice_window(&p, 61, 60).unwrap() {
            WindowSlice::Ready(w) => {
                assert_eq!(w.start_index, 0);
                assert_eq!(w.end_index, 60);
                assert_eq!(w.r.rows(), 60);
                assert_eq!(w.r.row(0), p.returns().row(0));
                assert_eq!(w.r.row(59), p.returns().row(59));
            }
            WindowSlice::Insufficient => panic!("expected a window"),
        }
    }

    #[test]
    fn boundary_trade_index_is_insufficient() {
        let p = panel(70);
        assert_eq!(slice_window(&p, 60, 60).unwrap(), WindowSlice::Insufficient);
        assert_eq!(slice_window(&p, 5, 60).unwrap(), WindowSlice::Insufficient);
    }

    #[test]
    fn out_of_range_trade_index_is_rejected() {
        let p = panel(10);
        assert!(matches!(slice_window(&p, 0, 5), Err(Error::Param(_))));
        assert!(matches!(slice_window(&p, 11, 5), Err(Error::Param(_))));
    }

    #[test]
    fn consecutive_windows_share_all_but_one_row() {
        let p = panel(30);
        let (a, b) = match (
            slice_window(&p, 20, 10).unwrap(),
            slice_window(&p, 21, 10).unwrap(),
        ) {
            (WindowSlice::Ready(a), WindowSlice::Ready(b)) => (a, b),
            _ => panic!("expected windows"),
        };
        let mut shared = 0;
        for i in 0..10 {
            for j in 0..10 {
                if a.r.row(i) == b.r.row(j) {
                    shared += 1;
                    break;
                }
            }
        }
        assert_eq!(shared, 9);
    }

    #[test]
    fn constructor_enforces_invariants() {
        let m = Matrix::from_flat(2, 2, vec![0.0; 4]).unwrap();
        // single asset
        assert!(matches!(
            ReturnPanel::new(
                vec![200001, 200002],
                vec!["a".to_string()],
                Matrix::from_flat(2, 1, vec![0.0; 2]).unwrap()
            ),
            Err(Error::Shape(_))
        ));
        // non-increasing dates
        assert!(matches!(
            ReturnPanel::new(
                vec![200002, 200002],
                vec!["a".to_string(), "b".to_string()],
                m.clone()
            ),
            Err(Error::Data(_))
        ));
        // non-finite entry
        assert!(matches!(
            ReturnPanel::new(
                vec![200001, 200002],
                vec!["a".to_string(), "b".to_string()],
                Matrix::from_flat(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).unwrap()
            ),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn restrict_dates_clips_inclusively() {
        let p = panel(10);
        let q = p.restrict_dates(200003, 200006).unwrap();
        assert_eq!(q.dates(), &[200003, 200004, 200005, 200006]);
        assert_eq!(q.returns().row(0), p.returns().row(2));
        assert!(p.restrict_dates(300001, 300002).is_err());
    }
}
