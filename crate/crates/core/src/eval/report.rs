use serde::{Deserialize, Serialize};

use super::metrics::{mape, rmse, weighted_average};
use crate::data::WindowDataset;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::training::{forecast, ForecastContext, ForecastMode, ForecastResult, Forecaster, Persistence};

pub const DEFAULT_HORIZONS: [usize; 3] = [10, 40, 80];

/// Units the headline metrics are computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Scaled,
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub rmse: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub horizon: usize,
    pub scaled: MetricPair,
    pub original: MetricPair,
}

impl HorizonMetrics {
    pub fn get(&self, basis: Basis) -> MetricPair {
        match basis {
            Basis::Scaled => self.scaled,
            Basis::Original => self.original,
        }
    }
}

/// Per-horizon metrics and their weighted averages in both units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub horizons: Vec<HorizonMetrics>,
    pub weights: Vec<f64>,
    pub weighted_scaled: MetricPair,
    pub weighted_original: MetricPair,
}

impl HorizonSummary {
    pub fn weighted(&self, basis: Basis) -> MetricPair {
        match basis {
            Basis::Scaled => self.weighted_scaled,
            Basis::Original => self.weighted_original,
        }
    }
}

/// Evaluation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub hidden_layers: usize,
    pub epochs: usize,
    pub basis: Basis,
    pub mode: ForecastMode,
    pub summary: HorizonSummary,
    /// Persistence forecast on the same windows.
    #[serde(default)]
    pub baseline: Option<HorizonSummary>,
}

impl MetricsReport {
    pub fn rmse(&self) -> f64 {
        self.summary.weighted(self.basis).rmse
    }

    pub fn mape(&self) -> f64 {
        self.summary.weighted(self.basis).mape
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub horizons: Vec<usize>,
    /// Equal weights when `None`.
    pub weights: Option<Vec<f64>>,
    pub mode: ForecastMode,
    pub basis: Basis,
    pub seed: u64,
    pub with_baseline: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            horizons: DEFAULT_HORIZONS.to_vec(),
            weights: None,
            mode: ForecastMode::Direct,
            basis: Basis::Scaled,
            seed: 0,
            with_baseline: true,
        }
    }
}

impl SweepConfig {
    fn resolved_weights(&self) -> Result<Vec<f64>> {
        match &self.weights {
            None => Ok(vec![1.0; self.horizons.len()]),
            Some(w) if w.len() == self.horizons.len() => Ok(w.clone()),
            Some(w) => Err(Error::invalid(format!("{} weights for {} horizons", w.len(), self.horizons.len()))),
        }
    }

    fn max_horizon(&self) -> Result<usize> {
        self.horizons.iter().copied().max().filter(|&h| h > 0).ok_or_else(|| Error::invalid("no horizons given"))
    }
}

/// Metrics for each horizon as a prefix of the forecast paths.
pub fn summarize(result: &ForecastResult, horizons: &[usize], weights: &[f64]) -> Result<HorizonSummary> {
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let (ps, as_) = result.truncated(h, true)?;
        let (po, ao) = result.truncated(h, false)?;
        out.push(HorizonMetrics {
            horizon: h,
            scaled: MetricPair { rmse: rmse(&as_, &ps)?, mape: mape(&as_, &ps)? },
            original: MetricPair { rmse: rmse(&ao, &po)?, mape: mape(&ao, &po)? },
        });
    }
    let avg = |f: &dyn Fn(&HorizonMetrics) -> f64| weighted_average(&out.iter().map(f).collect::<Vec<_>>(), weights);
    Ok(HorizonSummary {
        weighted_scaled: MetricPair { rmse: avg(&|m| m.scaled.rmse)?, mape: avg(&|m| m.scaled.mape)? },
        weighted_original: MetricPair { rmse: avg(&|m| m.original.rmse)?, mape: avg(&|m| m.original.mape)? },
        horizons: out,
        weights: weights.to_vec(),
    })
}

/// Every predicted value is the last observed target value of its window.
pub fn persistence_baseline(test: &WindowDataset, horizon: usize, ctx: &ForecastContext) -> Result<ForecastResult> {
    let model = Persistence { target_index: test.feature_index(&test.target_column)?, head: horizon };
    forecast(&model, test, horizon, ForecastMode::Direct, ctx, 0, Execution::Sequential)
}

/// Forecasts the test windows once at the longest horizon and scores every
/// requested horizon as a prefix.
pub fn horizon_sweep(
    model: &dyn Forecaster,
    test: &WindowDataset,
    ctx: &ForecastContext,
    cfg: &SweepConfig,
    hidden_layers: usize,
    epochs: usize,
    exec: Execution,
) -> Result<MetricsReport> {
    let weights = cfg.resolved_weights()?;
    let max_h = cfg.max_horizon()?;
    if max_h > test.horizon {
        return Err(Error::data(format!(
            "test windows carry {} target steps, horizon {max_h} requested",
            test.horizon
        )));
    }
    let result = forecast(model, test, max_h, cfg.mode, ctx, cfg.seed, exec)?;
    let summary = summarize(&result, &cfg.horizons, &weights)?;
    let baseline = if cfg.with_baseline {
        Some(summarize(&persistence_baseline(test, max_h, ctx)?, &cfg.horizons, &weights)?)
    } else {
        None
    };
    Ok(MetricsReport { model: model.name(), hidden_layers, epochs, basis: cfg.basis, mode: cfg.mode, summary, baseline })
}

pub const BASELINE_NAME: &str = "persistence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub rmse: f64,
    pub mape: f64,
    pub hidden_layers: Option<usize>,
    pub epochs: Option<usize>,
    /// `(horizon, rmse, mape)` in the table basis.
    pub horizons: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub basis: Basis,
    pub horizons: Vec<usize>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("MODEL,RMSE,MAPE,HIDDEN_LAYERS,EPOCHS");
        for h in &self.horizons {
            s.push_str(&format!(",RMSE_{h},MAPE_{h}"));
        }
        s.push('\n');
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!("{},{:.6},{:.6},{},{}", r.model, r.rmse, r.mape, opt(r.hidden_layers), opt(r.epochs)));
            for (_, rm, mp) in &r.horizons {
                s.push_str(&format!(",{rm:.6},{mp:.6}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn row(model: &str, summary: &HorizonSummary, basis: Basis, layers: Option<usize>, epochs: Option<usize>) -> ComparisonRow {
    let w = summary.weighted(basis);
    ComparisonRow {
        model: model.to_string(),
        rmse: w.rmse,
        mape: w.mape,
        hidden_layers: layers,
        epochs,
        horizons: summary.horizons.iter().map(|h| (h.horizon, h.get(basis).rmse, h.get(basis).mape)).collect(),
    }
}

/// Rows sorted by weighted RMSE (ties by name), then the persistence row if
/// any report carries baseline metrics.
pub fn compare_models(reports: &[MetricsReport]) -> Result<ComparisonTable> {
    let first = reports.first().ok_or_else(|| Error::invalid("compare needs at least one report"))?;
    let horizons: Vec<usize> = first.summary.horizons.iter().map(|h| h.horizon).collect();
    for r in reports {
        if r.basis != first.basis {
            return Err(Error::data(format!(
                "mixed metric bases: {} is {:?}, {} is {:?}",
                first.model, first.basis, r.model, r.basis
            )));
        }
        let hs: Vec<usize> = r.summary.horizons.iter().map(|h| h.horizon).collect();
        if hs != horizons {
            return Err(Error::data(format!("{} was scored on horizons {hs:?}, expected {horizons:?}", r.model)));
        }
    }
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| row(&r.model, &r.summary, r.basis, Some(r.hidden_layers), Some(r.epochs)))
        .collect();
    rows.sort_by(|a, b| a.rmse.total_cmp(&b.rmse).then_with(|| a.model.cmp(&b.model)));
    if let Some(b) = reports.iter().find_map(|r| r.baseline.as_ref()) {
        rows.push(row(BASELINE_NAME, b, first.basis, None, None));
    }
    Ok(ComparisonTable { basis: first.basis, horizons, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(name: &str, rmse: f64, mape: f64, basis: Basis) -> MetricsReport {
        let p = MetricPair { rmse, mape };
        MetricsReport {
            model: name.into(),
            hidden_layers: 6,
            epochs: 50,
            basis,
            mode: ForecastMode::Direct,
            summary: HorizonSummary {
                horizons: vec![HorizonMetrics { horizon: 10, scaled: p, original: p }],
                weights: vec![1.0],
                weighted_scaled: p,
                weighted_original: p,
            },
            baseline: None,
        }
    }

    #[test]
    fn rows_sort_by_weighted_rmse() {
        let reps = vec![
            report("LSTM", 0.623, 0.662, Basis::Scaled),
            report("GRU", 0.3901, 0.4073, Basis::Scaled),
            report("WGAN", 0.553, 0.515, Basis::Scaled),
            report("TimeGAN", 0.347, 0.3804, Basis::Scaled),
        ];
        let t = compare_models(&reps).unwrap();
        let names: Vec<&str> = t.rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, ["TimeGAN", "GRU", "WGAN", "LSTM"]);
        assert!(t.to_csv().starts_with("MODEL,RMSE,MAPE,HIDDEN_LAYERS,EPOCHS,RMSE_10,MAPE_10\nTimeGAN,0.347000,0.380400,6,50"));
    }

    #[test]
    fn ties_break_by_name() {
        let t = compare_models(&[report("b", 0.1, 0.1, Basis::Scaled), report("a", 0.1, 0.2, Basis::Scaled)]).unwrap();
        assert_eq!(t.rows[0].model, "a");
    }

    #[test]
    fn mixed_basis_is_a_data_error() {
        let r = compare_models(&[report("a", 0.1, 0.1, Basis::Scaled), report("b", 0.1, 0.1, Basis::Original)]);
        assert!(matches!(r, Err(Error::Data(_))));
    }
}
