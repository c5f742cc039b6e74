use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ohlcv::{finish_csv, PriceSeries, RAW_FIELDS};
use crate::error::{Error, Result};

pub const DEFAULT_SMA_WINDOW: usize = 10;

/// Dense date-indexed feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Row-major, `dates.len() * columns.len()` values.
    pub data: Vec<f64>,
    /// Leading rows dropped because a diff or moving average was undefined.
    pub trimmed_rows: usize,
    /// Diffs whose previous value was zero and were defined as 0.
    pub zero_denominator_diffs: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("unknown feature column {name}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok((0..self.n_rows()).map(|r| self.row(r)[j]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Date".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (r, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.format("%Y-%m-%d").to_string()];
            row.extend(self.row(r).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        finish_csv(w)
    }
}

pub fn diff_name(field: &str) -> String {
    format!("{field}_Diff")
}

pub fn sma_name(field: &str) -> String {
    format!("{field}_SMA")
}

/// The 18 default column names: raw fields, then diffs, then moving averages.
pub fn default_columns() -> Vec<String> {
    let mut cols: Vec<String> = RAW_FIELDS.iter().map(|s| s.to_string()).collect();
    cols.extend(RAW_FIELDS.iter().map(|f| diff_name(f)));
    cols.extend(RAW_FIELDS.iter().map(|f| sma_name(f)));
    cols
}

/// Relative change `(cur - prev) / prev`; a zero `prev` yields 0.
pub fn pct_change(prev: f64, cur: f64) -> (f64, bool) {
    if prev == 0.0 {
        (0.0, true)
    } else {
        ((cur - prev) / prev, false)
    }
}

/// Raw fields, their consecutive relative changes, and trailing moving averages.
///
/// Rows where any derived value is undefined (the first row for diffs, the
/// first `sma_window - 1` rows for averages) are trimmed.
pub fn build_features(series: &PriceSeries, sma_window: usize) -> Result<FeatureMatrix> {
    if sma_window == 0 {
        return Err(Error::invalid("sma_window must be positive"));
    }
    let n = series.len();
    if n <= sma_window {
        return Err(Error::data(format!("need more than {sma_window} rows to build features, got {n}")));
    }
    let trim = (sma_window - 1).max(1);
    let raw: Vec<[f64; 6]> = series.records.iter().map(|r| r.values()).collect();
    let cols = default_columns();
    let mut data = Vec::with_capacity((n - trim) * cols.len());
    let mut zero_den = 0;
    for (r, vals) in raw.iter().enumerate() {
        if r < trim {
            continue;
        }
        data.extend_from_slice(vals);
        for f in 0..6 {
            let (d, z) = pct_change(raw[r - 1][f], vals[f]);
            zero_den += z as usize;
            data.push(d);
        }
        for f in 0..6 {
            let s: f64 = raw[r + 1 - sma_window..=r].iter().map(|v| v[f]).sum();
            data.push(s / sma_window as f64);
        }
    }
    Ok(FeatureMatrix {
        columns: cols,
        dates: series.records[trim..].iter().map(|r| r.date).collect(),
        data,
        trimmed_rows: trim,
        zero_denominator_diffs: zero_den,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ohlcv::{OhlcvRecord, Provenance};
    use chrono::Duration;

    fn series(closes: &[f64]) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        let records = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| OhlcvRecord {
                date: start + Duration::days(i as i64),
                open: c,
                high: c,
                low: c,
                close: c,
                adj_close: c,
                volume: c,
            })
            .collect();
        PriceSeries { records, provenance: Provenance::Raw }
    }

    #[test]
    fn eighteen_named_columns() {
        let f = build_features(&series(&[1.0; 20]), 10).unwrap();
        assert_eq!(f.n_cols(), 18);
        assert_eq!(f.columns[9], "Close_Diff");
        assert_eq!(f.columns[16], "Adj Close_SMA");
        assert_eq!(f.trimmed_rows, 9);
        assert_eq!(f.n_rows(), 11);
    }

    #[test]
    fn ten_percent_change() {
        let f = build_features(&series(&[100.0, 110.0]), 1).unwrap();
        assert!((f.column("Close_Diff").unwrap()[0] - 0.10).abs() < 1e-15);
    }

    #[test]
    fn constant_sma() {
        let f = build_features(&series(&[5.0; 15]), 4).unwrap();
        assert!(f.column("Close_SMA").unwrap().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn trailing_sma_hand_values() {
        let closes: Vec<f64> = (1..=12).map(f64::from).collect();
        let f = build_features(&series(&closes), 10).unwrap();
        // first kept row is the 10th (close 10)
        let sma = f.column("Close_SMA").unwrap();
        assert_eq!(sma, vec![5.5, 6.5, 7.5]);
    }

    #[test]
    fn zero_previous_volume_counts_warning() {
        let mut s = series(&[1.0, 2.0, 3.0]);
        s.records[0].volume = 0.0;
        let f = build_features(&s, 1).unwrap();
        assert_eq!(f.column("Volume_Diff").unwrap()[0], 0.0);
        assert_eq!(f.zero_denominator_diffs, 1);
    }

    #[test]
    fn too_short_rejected() {
        assert!(build_features(&series(&[1.0; 10]), 10).is_err());
    }
}
