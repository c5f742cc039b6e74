use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::repair_calendar;
use super::features::{build_features, FeatureMatrix};
use super::ohlcv::{PriceSeries, Provenance, RepairSummary};
use super::scaler::{apply_scaler, fit_scaler, ScalerParams};
use super::windows::{make_windows, split_train_test, WindowDataset};
use crate::error::{Error, Result};

/// What the forecasting target is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    #[default]
    Close,
    /// Relative close-to-close changes (`Close_Diff`).
    Returns,
}

impl TargetMode {
    pub fn column(self) -> &'static str {
        match self {
            TargetMode::Close => "Close",
            TargetMode::Returns => "Close_Diff",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub knn_k: usize,
    pub sma_window: usize,
    pub seq_len: usize,
    /// Target length of every window; must cover the longest evaluation horizon.
    pub horizon: usize,
    pub train_ratio: f64,
    pub target: TargetMode,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { knn_k: 5, sma_window: 10, seq_len: 30, horizon: 80, train_ratio: 0.7, target: TargetMode::Close }
    }
}

/// Bookkeeping emitted next to the prepared dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub source_rows: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub repair: RepairSummary,
    pub repaired_rows: usize,
    pub trimmed_rows: usize,
    pub feature_rows: usize,
    pub zero_denominator_diffs: usize,
    pub scaler: ScalerParams,
    pub total_windows: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub purged_windows: usize,
    /// Last target date of the training windows.
    pub split_boundary_date: NaiveDate,
    pub config: DataConfig,
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub repaired: PriceSeries,
    /// Features in original units.
    pub features: FeatureMatrix,
    pub scaler: ScalerParams,
    pub scaled: FeatureMatrix,
    pub train: WindowDataset,
    pub test: WindowDataset,
    pub manifest: DatasetManifest,
}

/// Repair, feature construction, train-only scaling, windowing and the
/// chronological split.
pub fn prepare(raw: &PriceSeries, cfg: &DataConfig) -> Result<PreparedData> {
    prepare_inner(raw, cfg, None)
}

/// As [`prepare`], but with scaler bounds fixed in advance (e.g. from a checkpoint).
pub fn prepare_with_scaler(raw: &PriceSeries, cfg: &DataConfig, scaler: &ScalerParams) -> Result<PreparedData> {
    prepare_inner(raw, cfg, Some(scaler))
}

fn prepare_inner(raw: &PriceSeries, cfg: &DataConfig, scaler: Option<&ScalerParams>) -> Result<PreparedData> {
    let repaired = repair_calendar(raw, cfg.knn_k)?;
    let features = build_features(&repaired, cfg.sma_window)?;
    let scaler = match scaler {
        Some(s) => s.clone(),
        None => fit_scaler(&features, cfg.train_ratio)?,
    };
    let scaled = apply_scaler(&features, &scaler)?;
    let all = make_windows(&scaled, cfg.seq_len, cfg.horizon, cfg.target.column())?;
    let (train, test, purged) = split_train_test(&all, cfg.train_ratio)?;
    let boundary = *train
        .target_dates(train.len() - 1)
        .last()
        .ok_or_else(|| Error::data("empty training split"))?;
    let repair = match repaired.provenance {
        Provenance::Repaired(s) => s,
        Provenance::Raw => RepairSummary::default(),
    };
    let manifest = DatasetManifest {
        source_rows: raw.len(),
        first_date: repaired.records[0].date,
        last_date: repaired.records[repaired.len() - 1].date,
        repair,
        repaired_rows: repaired.len(),
        trimmed_rows: features.trimmed_rows,
        feature_rows: features.n_rows(),
        zero_denominator_diffs: features.zero_denominator_diffs,
        scaler: scaler.clone(),
        total_windows: all.len(),
        train_windows: train.len(),
        test_windows: test.len(),
        purged_windows: purged,
        split_boundary_date: boundary,
        config: cfg.clone(),
    };
    Ok(PreparedData { repaired, features, scaler, scaled, train, test, manifest })
}
