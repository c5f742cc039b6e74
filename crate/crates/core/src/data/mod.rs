//! OHLCV ingestion, calendar repair, feature construction, scaling and windowing.

mod calendar;
mod features;
mod ohlcv;
mod pipeline;
mod scaler;
pub mod synth;
mod windows;

pub use calendar::{is_weekend, repair_calendar, MAX_IMPUTABLE_GAP};
pub use features::{build_features, default_columns, diff_name, pct_change, sma_name, FeatureMatrix, DEFAULT_SMA_WINDOW};
pub use ohlcv::{parse_ohlcv_csv, OhlcvRecord, PriceSeries, Provenance, RepairSummary, RAW_FIELDS};
pub use pipeline::{prepare, prepare_with_scaler, DataConfig, DatasetManifest, PreparedData, TargetMode};
pub use scaler::{apply_scaler, fit_scaler, inverse_scaler, split_index, ScalerParams};
pub use windows::{make_windows, split_train_test, SplitTag, WindowDataset};

use sha2::{Digest, Sha256};

/// Hex SHA-256 of a byte string.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
