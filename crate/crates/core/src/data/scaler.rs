use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};

/// Number of leading items that make up `ratio` of `n`.
pub fn split_index(n: usize, ratio: f64) -> usize {
    // the epsilon keeps products like 0.7 * 90 from flooring to 62
    (((n as f64) * ratio) + 1e-9).floor() as usize
}

/// Per-column min–max bounds observed on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Leading rows the bounds were fitted on.
    pub train_rows: usize,
}

impl ScalerParams {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("scaler has no column {name}")))
    }

    pub fn scale(&self, col: usize, v: f64) -> f64 {
        (v - self.min[col]) / (self.max[col] - self.min[col])
    }

    pub fn unscale(&self, col: usize, v: f64) -> f64 {
        v * (self.max[col] - self.min[col]) + self.min[col]
    }
}

/// Fits min–max bounds on the chronologically first `train_fraction` of rows.
pub fn fit_scaler(features: &FeatureMatrix, train_fraction: f64) -> Result<ScalerParams> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::invalid(format!("train fraction must lie in (0, 1], got {train_fraction}")));
    }
    let train_rows = split_index(features.n_rows(), train_fraction);
    if train_rows == 0 {
        return Err(Error::data("no training rows to fit the scaler on"));
    }
    let c = features.n_cols();
    let mut min = vec![f64::INFINITY; c];
    let mut max = vec![f64::NEG_INFINITY; c];
    for r in 0..train_rows {
        for (j, &v) in features.row(r).iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    for j in 0..c {
        if !(max[j] > min[j]) {
            return Err(Error::data(format!(
                "column {} is constant on the training rows and cannot be scaled",
                features.columns[j]
            )));
        }
    }
    Ok(ScalerParams { columns: features.columns.clone(), min, max, train_rows })
}

/// Maps every column by its fitted bounds. Values outside the training
/// range land outside `[0, 1]` and are left unclipped.
pub fn apply_scaler(features: &FeatureMatrix, params: &ScalerParams) -> Result<FeatureMatrix> {
    if features.columns != params.columns {
        return Err(Error::invalid("feature columns do not match the scaler's columns"));
    }
    let c = features.n_cols();
    let data = features.data.iter().enumerate().map(|(i, &v)| params.scale(i % c, v)).collect();
    Ok(FeatureMatrix { data, ..features.clone() })
}

/// Maps scaled values of one column back to original units.
pub fn inverse_scaler(values: &[f64], params: &ScalerParams, column: &str) -> Result<Vec<f64>> {
    let j = params.column_index(column)?;
    Ok(values.iter().map(|&v| params.unscale(j, v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = cols[0].len();
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let data = (0..n).flat_map(|r| cols.iter().map(move |c| c[r])).collect();
        FeatureMatrix {
            columns: (0..cols.len()).map(|j| format!("c{j}")).collect(),
            dates: (0..n).map(|i| d0 + chrono::Duration::days(i as i64)).collect(),
            data,
            trimmed_rows: 0,
            zero_denominator_diffs: 0,
        }
    }

    #[test]
    fn scales_train_column_into_unit_interval() {
        let m = matrix(vec![vec![0.0, 5.0, 10.0]]);
        let p = fit_scaler(&m, 1.0).unwrap();
        assert_eq!(apply_scaler(&m, &p).unwrap().data, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn test_values_are_not_clipped() {
        let m = matrix(vec![vec![0.0, 10.0, 5.0, 12.0]]);
        let p = fit_scaler(&m, 0.5).unwrap();
        let s = apply_scaler(&m, &p).unwrap();
        assert!((s.data[3] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn constant_column_rejected() {
        let m = matrix(vec![vec![1.0, 2.0], vec![3.0, 3.0]]);
        assert!(fit_scaler(&m, 1.0).unwrap_err().to_string().contains("c1"));
    }

    #[test]
    fn split_index_is_exact_for_decimal_ratios() {
        assert_eq!(split_index(90, 0.7), 63);
        assert_eq!(split_index(100, 0.7), 70);
        assert_eq!(split_index(10, 0.3), 3);
    }
}
