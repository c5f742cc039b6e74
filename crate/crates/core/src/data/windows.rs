use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use super::scaler::split_index;
use crate::error::{Error, Result};
use crate::numcore::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Full,
    Train,
    Test,
}

/// Fixed-length input windows with the following `horizon` target values.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    pub feature_columns: Vec<String>,
    pub target_column: String,
    pub seq_len: usize,
    pub horizon: usize,
    /// Dates of every row of the source feature matrix.
    pub dates: Vec<NaiveDate>,
    /// First feature row of each window.
    pub starts: Vec<usize>,
    /// `len * seq_len * n_features` values.
    pub inputs: Vec<f64>,
    /// `len * horizon` values.
    pub targets: Vec<f64>,
    pub split: SplitTag,
}

impl WindowDataset {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_columns.len()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("window features have no column {name}")))
    }

    pub fn window(&self, i: usize) -> &[f64] {
        let w = self.seq_len * self.n_features();
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn input_dates(&self, i: usize) -> &[NaiveDate] {
        &self.dates[self.starts[i]..self.starts[i] + self.seq_len]
    }

    pub fn target_dates(&self, i: usize) -> &[NaiveDate] {
        let s = self.starts[i] + self.seq_len;
        &self.dates[s..s + self.horizon]
    }

    /// Stacked inputs of the selected windows, `[batch, seq_len, n_features]`.
    pub fn input_tensor(&self, idx: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(idx.len() * self.seq_len * self.n_features());
        for &i in idx {
            data.extend_from_slice(self.window(i));
        }
        Tensor::new(vec![idx.len(), self.seq_len, self.n_features()], data).expect("window shape")
    }

    /// The first `width` targets of the selected windows, `[batch, width]`.
    pub fn target_tensor(&self, idx: &[usize], width: usize) -> Result<Tensor> {
        if width == 0 || width > self.horizon {
            return Err(Error::invalid(format!("target width {width} outside 1..={}", self.horizon)));
        }
        let mut data = Vec::with_capacity(idx.len() * width);
        for &i in idx {
            data.extend_from_slice(&self.target(i)[..width]);
        }
        Tensor::new(vec![idx.len(), width], data)
    }

    fn subset(&self, range: std::ops::Range<usize>, split: SplitTag) -> WindowDataset {
        let w = self.seq_len * self.n_features();
        WindowDataset {
            starts: self.starts[range.clone()].to_vec(),
            inputs: self.inputs[range.start * w..range.end * w].to_vec(),
            targets: self.targets[range.start * self.horizon..range.end * self.horizon].to_vec(),
            split,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> WindowDataset {
        WindowDataset {
            feature_columns: self.feature_columns.clone(),
            target_column: self.target_column.clone(),
            seq_len: self.seq_len,
            horizon: self.horizon,
            dates: self.dates.clone(),
            starts: Vec::new(),
            inputs: Vec::new(),
            targets: Vec::new(),
            split: self.split,
        }
    }
}

/// Stride-1 sliding windows over `features`; targets are the next `horizon`
/// values of `target_column`.
pub fn make_windows(features: &FeatureMatrix, seq_len: usize, horizon: usize, target_column: &str) -> Result<WindowDataset> {
    if seq_len == 0 || horizon == 0 {
        return Err(Error::invalid("seq_len and horizon must be positive"));
    }
    let need = seq_len + horizon;
    let rows = features.n_rows();
    if rows < need {
        return Err(Error::data(format!(
            "windowing needs at least {need} feature rows (seq_len {seq_len} + horizon {horizon}), got {rows}"
        )));
    }
    let tcol = features.column_index(target_column)?;
    let count = rows - need + 1;
    let c = features.n_cols();
    let mut inputs = Vec::with_capacity(count * seq_len * c);
    let mut targets = Vec::with_capacity(count * horizon);
    for s in 0..count {
        inputs.extend_from_slice(&features.data[s * c..(s + seq_len) * c]);
        targets.extend((s + seq_len..s + need).map(|r| features.row(r)[tcol]));
    }
    Ok(WindowDataset {
        feature_columns: features.columns.clone(),
        target_column: target_column.to_string(),
        seq_len,
        horizon,
        dates: features.dates.clone(),
        starts: (0..count).collect(),
        inputs,
        targets,
        split: SplitTag::Full,
    })
}

/// Chronological split: the first `ratio` of windows train, the rest test.
///
/// The first `horizon - 1` windows after the boundary would share target
/// dates with the last training window; they are purged so the two target
/// sets are disjoint. The purge count is returned alongside.
pub fn split_train_test(ds: &WindowDataset, ratio: f64) -> Result<(WindowDataset, WindowDataset, usize)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let n = ds.len();
    let n_train = split_index(n, ratio);
    let purge = ds.horizon - 1;
    let test_start = n_train + purge;
    if n_train == 0 || test_start >= n {
        return Err(Error::data(format!(
            "{n} windows are too few for a {ratio} split with horizon {}",
            ds.horizon
        )));
    }
    Ok((ds.subset(0..n_train, SplitTag::Train), ds.subset(test_start..n, SplitTag::Test), purge))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(rows: usize, cols: usize) -> FeatureMatrix {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let mut columns: Vec<String> = (0..cols).map(|j| format!("f{j}")).collect();
        columns[0] = "Close".into();
        FeatureMatrix {
            columns,
            dates: (0..rows).map(|i| d0 + chrono::Duration::days(i as i64)).collect(),
            data: (0..rows * cols).map(|i| i as f64).collect(),
            trimmed_rows: 0,
            zero_denominator_diffs: 0,
        }
    }

    #[test]
    fn window_and_split_counts() {
        let ds = make_windows(&features(100, 2), 10, 1, "Close").unwrap();
        assert_eq!(ds.len(), 90);
        let (tr, te, purged) = split_train_test(&ds, 0.7).unwrap();
        assert_eq!((tr.len(), te.len(), purged), (63, 27, 0));
    }

    #[test]
    fn long_horizon_targets() {
        let ds = make_windows(&features(200, 1), 30, 80, "Close").unwrap();
        assert_eq!(ds.target(0).len(), 80);
        assert_eq!(ds.target(0)[0], 30.0);
        assert_eq!(ds.target(0)[79], 109.0);
    }

    #[test]
    fn adjacent_windows_overlap_by_seq_len_minus_one_rows() {
        let ds = make_windows(&features(40, 3), 10, 2, "Close").unwrap();
        let (a, b) = (ds.window(4), ds.window(5));
        assert_eq!(&a[3..], &b[..27]);
        assert_ne!(a[..3], b[..3]);
    }

    #[test]
    fn targets_follow_inputs_contiguously() {
        let ds = make_windows(&features(60, 2), 7, 3, "Close").unwrap();
        for i in 0..ds.len() {
            let last_input = *ds.input_dates(i).last().unwrap();
            assert_eq!(ds.target_dates(i)[0], last_input + chrono::Duration::days(1));
        }
    }

    #[test]
    fn purged_split_has_disjoint_target_dates() {
        let ds = make_windows(&features(120, 1), 10, 5, "Close").unwrap();
        let (tr, te, purged) = split_train_test(&ds, 0.7).unwrap();
        assert_eq!(purged, 4);
        assert_eq!(tr.len() + te.len() + purged, ds.len());
        let train_max = *tr.target_dates(tr.len() - 1).last().unwrap();
        let test_min = te.target_dates(0)[0];
        assert!(train_max < test_min);
    }

    #[test]
    fn insufficient_rows_reports_minimum() {
        let e = make_windows(&features(10, 1), 10, 1, "Close").unwrap_err();
        assert!(e.to_string().contains("at least 11"));
    }
}
