//! Return-file ingestion and the canonical CSV export.
//!
//! Input follows the Kenneth French data library layout: prose paragraphs,
//! then a header naming the portfolios, then rows `YYYYMM, v1, v2, ...`.
//! A data line is recognized by its leading 6-digit month token; reading
//! stops at the end of the first data block, so files that append
//! equal-weighted or annual blocks after the monthly one load cleanly.
//! Values are percentages unless `percent_scale` is off.

use std::path::Path;

use anyhow::{Context, Result, anyhow, bail};
use sparse_cvar::{Error as CoreError, Matrix, ReturnPanel};

/// Missing-value markers used by the source files. Rows containing one are
/// rejected outright; no imputation.
const SENTINELS: [f64; 2] = [-99.99, -999.0];

/// Where the loaded numbers came from; recorded in run metadata because the
/// upstream files carry several return blocks and revise history.
#[derive(Debug, Clone)]
pub struct DataProvenance {
    pub path: String,
    /// Nearest non-empty line above the header, usually the block title
    /// (e.g. "Average Value Weighted Returns -- Monthly").
    pub block_title: Option<String>,
    pub header: Option<String>,
    pub rows: usize,
    pub assets: usize,
    pub first_date: u32,
    pub last_date: u32,
    /// True when further data blocks existed after the one that was read.
    pub extra_blocks_skipped: bool,
    pub percent_scale: bool,
}

fn is_month_token(tok: &str) -> bool {
    tok.len() == 6 && tok.bytes().all(|b| b.is_ascii_digit())
}

pub fn load_panel(path: &Path, percent_scale: bool) -> Result<(ReturnPanel, DataProvenance)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read data file {}", path.display()))?;

    let mut prev_nonempty: Vec<String> = Vec::new();
    let mut header: Option<String> = None;
    let mut block_title: Option<String> = None;
    let mut dates: Vec<u32> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut n_cols: Option<usize> = None;
    let mut in_block = false;
    let mut extra_blocks_skipped = false;
    let mut sentinel_hits: Vec<(u32, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end();
        let first_field = line.split(',').next().unwrap_or("").trim();
        let is_data = is_month_token(first_field);

        if !is_data {
            if in_block {
                // first data block ended; note whether more data follows
                extra_blocks_skipped = text
                    .lines()
                    .skip(lineno)
                    .any(|l| is_month_token(l.split(',').next().unwrap_or("").trim()));
                break;
            }
            if !line.trim().is_empty() {
                prev_nonempty.push(line.trim().to_string());
            }
            continue;
        }

        if !in_block {
            in_block = true;
            header = prev_nonempty.last().cloned();
            if prev_nonempty.len() >= 2 {
                block_title = Some(prev_nonempty[prev_nonempty.len() - 2].clone());
            }
        }

        let mut fields = line.split(',');
        let date: u32 = fields
            .next()
            .expect("data line has a first field")
            .trim()
            .parse()
            .map_err(|_| anyhow!("line {lineno}: bad month stamp"))?;
        let values: Vec<f64> = fields
            .enumerate()
            .map(|(j, tok)| {
                tok.trim().parse::<f64>().map_err(|_| {
                    anyhow!("line {lineno}: cannot parse column {} value `{}`", j + 2, tok.trim())
                })
            })
            .collect::<Result<_>>()?;
        match n_cols {
            None => {
                if values.len() < 2 {
                    bail!(CoreError::Shape(format!(
                        "line {lineno}: {} asset columns, need at least 2",
                        values.len()
                    )));
                }
                n_cols = Some(values.len());
            }
            Some(n) if n != values.len() => {
                bail!("line {lineno}: {} columns, expected {n}", values.len());
            }
            _ => {}
        }
        for (j, &v) in values.iter().enumerate() {
            if SENTINELS.contains(&v) {
                sentinel_hits.push((date, j));
            }
        }
        dates.push(date);
        rows.push(values);
    }

    if rows.is_empty() {
        bail!(CoreError::Data(format!(
            "no data rows found in {}",
            path.display()
        )));
    }
    let n = n_cols.expect("rows imply a column count");
    let assets = asset_names(header.as_deref(), n);

    if !sentinel_hits.is_empty() {
        let shown: Vec<String> = sentinel_hits
            .iter()
            .take(20)
            .map(|(d, j)| format!("{} @{}", assets[*j], d))
            .collect();
        let suffix = if sentinel_hits.len() > 20 { ", ..." } else { "" };
        bail!(CoreError::Data(format!(
            "{} sentinel value(s) (missing data markers): {}{}",
            sentinel_hits.len(),
            shown.join(", "),
            suffix
        )));
    }

    if percent_scale {
        for row in &mut rows {
            for v in row.iter_mut() {
                *v /= 100.0;
            }
        }
    }

    let first_date = dates[0];
    let last_date = *dates.last().expect("nonempty");
    let n_rows = rows.len();
    let panel = ReturnPanel::new(dates, assets, Matrix::from_rows(rows)?)?;
    Ok((
        panel,
        DataProvenance {
            path: path.display().to_string(),
            block_title,
            header,
            rows: n_rows,
            assets: n,
            first_date,
            last_date,
            extra_blocks_skipped,
            percent_scale,
        },
    ))
}

fn asset_names(header: Option<&str>, n: usize) -> Vec<String> {
    if let Some(h) = header {
        let fields: Vec<String> = h.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() == n && fields.iter().all(|f| !f.is_empty()) {
            return fields;
        }
        // header carries a (possibly empty) date column label
        if fields.len() == n + 1 && fields[1..].iter().all(|f| !f.is_empty()) {
            return fields[1..].to_vec();
        }
    }
    (1..=n).map(|j| format!("A{j}")).collect()
}

/// Canonical export: decimal returns, header always present, shortest
/// round-trippable float formatting so save/load is bit-exact.
pub fn save_panel(panel: &ReturnPanel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("date,");
    out.push_str(&panel.assets().join(","));
    out.push('\n');
    for (i, date) in panel.dates().iter().enumerate() {
        out.push_str(&date.to_string());
        for v in panel.returns().row(i) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sparse-cvar-dataio-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    const FRENCH_STYLE: &str = "\
  This file was created from some database.
  Missing data are indicated by -99.99.

  Average Value Weighted Returns -- Monthly
        ,Lo 10, Dec 2, Hi 10
197107,   1.23,  -0.50,  0.00
197108,  -2.00,   0.75,  1.10

  Average Equal Weighted Returns -- Monthly
        ,Lo 10, Dec 2, Hi 10
197107,   9.99,   9.99,  9.99
";

    #[test]
    fn parses_first_block_of_french_style_file() {
        let path = write_temp("french.csv", FRENCH_STYLE);
        let (panel, prov) = load_panel(&path, true).unwrap();
        assert_eq!(panel.n_periods(), 2);
        assert_eq!(panel.n_assets(), 3);
        assert_eq!(panel.assets(), &["Lo 10", "Dec 2", "Hi 10"]);
        assert_eq!(panel.dates(), &[197107, 197108]);
        // percent scaling
        assert!((panel.returns().get(0, 0) - 0.0123).abs() < 1e-15);
        assert!((panel.returns().get(1, 2) - 0.011).abs() < 1e-15);
        assert!(prov.extra_blocks_skipped);
        assert_eq!(
            prov.block_title.as_deref(),
            Some("Average Value Weighted Returns -- Monthly")
        );
    }

    #[test]
    fn sentinel_rows_are_rejected_with_location() {
        let contents = "\
hdr,a,b
200001, 1.0, 2.0
200002, -99.99, 1.0
200003, 0.5, -999
";
        let path = write_temp("sentinel.csv", contents);
        let err = load_panel(&path, true).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("200002"), "{msg}");
        assert!(msg.contains("200003"), "{msg}");
        assert!(msg.contains('a') && msg.contains('b'), "{msg}");
    }

    #[test]
    fn malformed_cell_names_the_line() {
        let path = write_temp("bad.csv", "200001, 1.0, oops\n");
        let err = load_panel(&path, true).unwrap_err();
        assert!(format!("{err:#}").contains("line 1"));
    }

    #[test]
    fn single_asset_file_is_a_shape_error() {
        let path = write_temp("thin.csv", "200001, 1.0\n200002, 0.5\n");
        let err = load_panel(&path, true).unwrap_err();
        assert!(matches!(
            err.downcast_ref::<CoreError>(),
            Some(CoreError::Shape(_))
        ));
    }

    #[test]
    fn canonical_export_round_trips_bit_for_bit() {
        let path = write_temp("rt_src.csv", FRENCH_STYLE);
        let (panel, _) = load_panel(&path, true).unwrap();
        let out = std::env::temp_dir().join("sparse-cvar-dataio-tests/rt.csv");
        save_panel(&panel, &out).unwrap();
        let (reloaded, _) = load_panel(&out, false).unwrap();
        assert_eq!(panel, reloaded);
        // a second save produces identical bytes
        let out2 = std::env::temp_dir().join("sparse-cvar-dataio-tests/rt2.csv");
        save_panel(&reloaded, &out2).unwrap();
        assert_eq!(
            std::fs::read(&out).unwrap(),
            std::fs::read(&out2).unwrap()
        );
    }
}
