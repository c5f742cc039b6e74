//! Forecast metrics, horizon sweeps, perturbation grids and the comparison table.

mod metrics;
mod perturb;
mod report;

pub use metrics::{mape, rmse, weighted_average};
pub use perturb::{overlay_points, perturbation_study, plot_csv, CellManifest, PerturbationCell, PerturbationGrid};
pub use report::{
    compare_models, horizon_sweep, persistence_baseline, summarize, Basis, ComparisonRow, ComparisonTable,
    HorizonMetrics, HorizonSummary, MetricPair, MetricsReport, SweepConfig, BASELINE_NAME, DEFAULT_HORIZONS,
};
