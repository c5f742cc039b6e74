use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::report::MetricsReport;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::training::ForecastResult;

/// Settings of one grid cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellManifest {
    pub layers: usize,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCell {
    pub manifest: CellManifest,
    pub report: Option<MetricsReport>,
    /// Why the cell's run failed, if it did.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationGrid {
    pub model: String,
    pub layer_grid: Vec<usize>,
    pub epoch_grid: Vec<usize>,
    /// Row-major over `layer_grid` x `epoch_grid`.
    pub cells: Vec<PerturbationCell>,
}

impl PerturbationGrid {
    pub fn cell(&self, layers: usize, epochs: usize) -> Option<&PerturbationCell> {
        self.cells.iter().find(|c| c.manifest.layers == layers && c.manifest.epochs == epochs)
    }

    /// For each layer count, whether RMSE never increases along the epoch axis
    /// (failed cells are skipped).
    pub fn epoch_trend(&self) -> Vec<(usize, bool)> {
        self.layer_grid
            .iter()
            .map(|&l| {
                let r: Vec<f64> = self
                    .epoch_grid
                    .iter()
                    .filter_map(|&e| self.cell(l, e).and_then(|c| c.report.as_ref()).map(|r| r.rmse()))
                    .collect();
                (l, r.windows(2).all(|w| w[1] <= w[0]))
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("layers,epochs,seed,rmse,mape,error\n");
        for c in &self.cells {
            let (r, m) = c
                .report
                .as_ref()
                .map(|r| (format!("{:.6}", r.rmse()), format!("{:.6}", r.mape())))
                .unwrap_or_default();
            let err = c.error.as_deref().unwrap_or("").replace(',', ";");
            s.push_str(&format!("{},{},{},{r},{m},{err}\n", c.manifest.layers, c.manifest.epochs, c.manifest.seed));
        }
        s
    }
}

/// Runs one training/evaluation per `(layers, epochs)` cell. Each cell gets
/// its own seed derived from `seed` and its position; a failing cell is
/// recorded and the rest of the grid still runs.
pub fn perturbation_study<F>(
    model: &str,
    layer_grid: &[usize],
    epoch_grid: &[usize],
    seed: u64,
    exec: Execution,
    run: F,
) -> Result<PerturbationGrid>
where
    F: Fn(&CellManifest) -> Result<MetricsReport> + Sync + Send,
{
    if layer_grid.is_empty() || epoch_grid.is_empty() {
        return Err(Error::invalid("perturbation grids must be non-empty"));
    }
    let ne = epoch_grid.len();
    let cells = map_indexed(exec, layer_grid.len() * ne, |i| {
        let manifest = CellManifest { layers: layer_grid[i / ne], epochs: epoch_grid[i % ne], seed: seed.wrapping_add(i as u64) };
        match run(&manifest) {
            Ok(r) => PerturbationCell { manifest, report: Some(r), error: None },
            Err(e) => PerturbationCell { manifest, report: None, error: Some(e.to_string()) },
        }
    });
    Ok(PerturbationGrid { model: model.to_string(), layer_grid: layer_grid.to_vec(), epoch_grid: epoch_grid.to_vec(), cells })
}

/// `(date, actual, predicted)` at forecast step `step` (1-based) of every window.
pub fn overlay_points(result: &ForecastResult, step: usize) -> Result<Vec<(NaiveDate, f64, f64)>> {
    if step == 0 || step > result.horizon {
        return Err(Error::invalid(format!("step {step} outside 1..={}", result.horizon)));
    }
    Ok((0..result.windows())
        .map(|w| {
            let i = w * result.horizon + step - 1;
            (result.dates[i], result.actual[i], result.predicted[i])
        })
        .collect())
}

/// Two-column `date,value` CSV.
pub fn plot_csv(points: impl IntoIterator<Item = (NaiveDate, f64)>) -> String {
    let mut s = String::from("date,value\n");
    for (d, v) in points {
        s.push_str(&format!("{d},{v:e}\n"));
    }
    s
}
