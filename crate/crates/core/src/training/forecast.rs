use std::collections::VecDeque;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::gan::GanModel;
use super::timegan::TimeGanModel;
use crate::data::{diff_name, pct_change, sma_name, ScalerParams, WindowDataset, RAW_FIELDS};
use crate::error::{Error, Result};
use crate::models::{FlowShape, Network};
use crate::numcore::{Mode, RngStream, Tensor};
use crate::par::{map_indexed, Execution};

/// Anything that maps scaled input windows to scaled target predictions.
pub trait Forecaster: Sync {
    fn name(&self) -> String;
    /// Width of one prediction.
    fn head(&self) -> usize;
    /// `inputs: [batch, seq_len, n_features]` to `[batch, head]`.
    fn predict(&self, inputs: &Tensor, rng: &mut RngStream) -> Result<Tensor>;
}

impl Forecaster for Network {
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    fn head(&self) -> usize {
        match self.spec.output_shape() {
            Ok(FlowShape::Flat { dim }) => dim,
            _ => 0,
        }
    }

    fn predict(&self, inputs: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        self.forward(inputs, Mode::Eval, rng)
    }
}

impl Forecaster for GanModel {
    fn name(&self) -> String {
        self.generator.spec.name.clone()
    }

    fn head(&self) -> usize {
        self.head
    }

    fn predict(&self, inputs: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        self.generate(inputs, rng)
    }
}

/// One-step TimeGAN forecaster: the last step of recovery(supervisor(embedder(x))).
pub struct TimeGanForecaster<'a> {
    pub model: &'a TimeGanModel,
    pub target_index: usize,
}

impl Forecaster for TimeGanForecaster<'_> {
    fn name(&self) -> String {
        "timegan".into()
    }

    fn head(&self) -> usize {
        1
    }

    fn predict(&self, inputs: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        let y = self.model.one_step(inputs, rng)?;
        let (b, len, f) = (y.shape()[0], y.shape()[1], y.shape()[2]);
        let data = (0..b).map(|i| y.data()[(i * len + len - 1) * f + self.target_index]).collect();
        Tensor::new(vec![b, 1], data)
    }
}

/// Repeats the last observed target value.
pub struct Persistence {
    pub target_index: usize,
    pub head: usize,
}

impl Forecaster for Persistence {
    fn name(&self) -> String {
        "persistence".into()
    }

    fn head(&self) -> usize {
        self.head
    }

    fn predict(&self, inputs: &Tensor, _rng: &mut RngStream) -> Result<Tensor> {
        let (b, len, f) = (inputs.shape()[0], inputs.shape()[1], inputs.shape()[2]);
        let mut data = Vec::with_capacity(b * self.head);
        for i in 0..b {
            let last = inputs.data()[(i * len + len - 1) * f + self.target_index];
            data.extend(std::iter::repeat_n(last, self.head));
        }
        Tensor::new(vec![b, self.head], data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ForecastMode {
    /// Read the whole horizon off the model head at once.
    #[default]
    Direct,
    /// Feed one-step predictions back, rebuilding derived features each step.
    Iterative,
}

impl std::str::FromStr for ForecastMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(ForecastMode::Direct),
            "iterative" => Ok(ForecastMode::Iterative),
            other => Err(Error::invalid(format!("unknown forecast mode {other:?}"))),
        }
    }
}

/// What is needed to undo scaling and rebuild features from predicted closes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastContext {
    pub scaler: ScalerParams,
    pub sma_window: usize,
}

/// Per-window predicted paths with the matching actuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub model: String,
    pub mode: ForecastMode,
    pub target_column: String,
    pub horizon: usize,
    /// Target dates, `windows * horizon`.
    pub dates: Vec<NaiveDate>,
    pub predicted_scaled: Vec<f64>,
    pub predicted: Vec<f64>,
    pub actual_scaled: Vec<f64>,
    pub actual: Vec<f64>,
}

impl ForecastResult {
    pub fn windows(&self) -> usize {
        self.predicted.len() / self.horizon.max(1)
    }

    /// First `h` steps of every window, in the given units.
    pub fn truncated(&self, h: usize, scaled: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        if h == 0 || h > self.horizon {
            return Err(Error::invalid(format!("horizon {h} outside 1..={}", self.horizon)));
        }
        let (p, a) = if scaled { (&self.predicted_scaled, &self.actual_scaled) } else { (&self.predicted, &self.actual) };
        let pick = |v: &Vec<f64>| v.chunks(self.horizon).flat_map(|c| c[..h].iter().copied()).collect::<Vec<_>>();
        Ok((pick(p), pick(a)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("window,step,date,actual,predicted,actual_scaled,predicted_scaled\n");
        for (i, d) in self.dates.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e}\n",
                i / self.horizon,
                i % self.horizon + 1,
                d,
                self.actual[i],
                self.predicted[i],
                self.actual_scaled[i],
                self.predicted_scaled[i]
            ));
        }
        s
    }
}

/// Column positions needed to rebuild a feature row from raw values.
struct Layout {
    raw: [usize; 6],
    diff: [usize; 6],
    sma: [usize; 6],
    n: usize,
}

impl Layout {
    fn new(columns: &[String]) -> Result<Layout> {
        let find = |name: &str| {
            columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::invalid(format!("iterative forecasting needs feature column {name}")))
        };
        let mut l = Layout { raw: [0; 6], diff: [0; 6], sma: [0; 6], n: columns.len() };
        for (k, f) in RAW_FIELDS.iter().enumerate() {
            l.raw[k] = find(f)?;
            l.diff[k] = find(&diff_name(f))?;
            l.sma[k] = find(&sma_name(f))?;
        }
        Ok(l)
    }
}

const CLOSE: usize = 3;
const ADJ_CLOSE: usize = 4;

/// Rolls one scaled window forward with a predicted target value.
struct Roller<'a> {
    layout: &'a Layout,
    scaler: &'a ScalerParams,
    scaler_cols: Vec<usize>,
    sma_window: usize,
    target_is_returns: bool,
    target_scaler_col: usize,
    window: VecDeque<Vec<f64>>,
    raw: VecDeque<[f64; 6]>,
}

impl<'a> Roller<'a> {
    fn new(layout: &'a Layout, ctx: &'a ForecastContext, columns: &[String], target: &str, window: &[f64]) -> Result<Self> {
        let scaler_cols = columns.iter().map(|c| ctx.scaler.column_index(c)).collect::<Result<Vec<_>>>()?;
        let target_scaler_col = ctx.scaler.column_index(target)?;
        let target_is_returns = match target {
            t if t == RAW_FIELDS[CLOSE] => false,
            t if t == diff_name(RAW_FIELDS[CLOSE]) => true,
            other => return Err(Error::invalid(format!("iterative forecasting cannot roll target {other}"))),
        };
        let rows: VecDeque<Vec<f64>> = window.chunks(layout.n).map(|r| r.to_vec()).collect();
        let raw = rows
            .iter()
            .map(|r| {
                let mut v = [0.0; 6];
                for k in 0..6 {
                    let c = layout.raw[k];
                    v[k] = ctx.scaler.unscale(scaler_cols[c], r[c]);
                }
                v
            })
            .collect();
        Ok(Roller {
            layout,
            scaler: &ctx.scaler,
            scaler_cols,
            sma_window: ctx.sma_window,
            target_is_returns,
            target_scaler_col,
            window: rows,
            raw,
        })
    }

    fn push(&mut self, predicted_scaled: f64) {
        let last = *self.raw.back().expect("non-empty window");
        let p = self.scaler.unscale(self.target_scaler_col, predicted_scaled);
        let close = if self.target_is_returns { last[CLOSE] * (1.0 + p) } else { p };
        let mut next = last;
        next[CLOSE] = close;
        next[ADJ_CLOSE] = if last[CLOSE] != 0.0 { last[ADJ_CLOSE] * close / last[CLOSE] } else { close };
        let mut row = vec![0.0; self.layout.n];
        let w = self.sma_window;
        for k in 0..6 {
            row[self.layout.raw[k]] = next[k];
            row[self.layout.diff[k]] = pct_change(last[k], next[k]).0;
            let prev: f64 = self.raw.iter().rev().take(w - 1).map(|r| r[k]).sum();
            row[self.layout.sma[k]] = (prev + next[k]) / w as f64;
        }
        for (c, v) in row.iter_mut().enumerate() {
            *v = self.scaler.scale(self.scaler_cols[c], *v);
        }
        self.window.pop_front();
        self.window.push_back(row);
        self.raw.pop_front();
        self.raw.push_back(next);
    }

    fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().flat_map(|r| r.iter().copied())
    }
}

const CHUNK: usize = 128;

/// Forecasts `horizon` target values for every window of `windows`.
///
/// Windows are processed in fixed chunks, each with its own forked noise
/// stream, so results do not depend on `exec`.
pub fn forecast(
    model: &dyn Forecaster,
    windows: &WindowDataset,
    horizon: usize,
    mode: ForecastMode,
    ctx: &ForecastContext,
    seed: u64,
    exec: Execution,
) -> Result<ForecastResult> {
    if windows.is_empty() {
        return Err(Error::data("no windows to forecast"));
    }
    if horizon == 0 || horizon > windows.horizon {
        return Err(Error::data(format!(
            "horizon {horizon} exceeds the {} target steps available per window",
            windows.horizon
        )));
    }
    let head = model.head();
    match mode {
        ForecastMode::Direct if horizon > head => {
            return Err(Error::invalid(format!("horizon {horizon} exceeds the model head width {head} in direct mode")))
        }
        ForecastMode::Iterative if head == 0 => return Err(Error::invalid("model has no prediction head")),
        ForecastMode::Iterative if windows.seq_len + 1 < ctx.sma_window => {
            return Err(Error::invalid(format!(
                "iterative forecasting needs seq_len >= sma_window - 1 ({} < {})",
                windows.seq_len,
                ctx.sma_window - 1
            )))
        }
        _ => {}
    }
    let layout = match mode {
        ForecastMode::Iterative => Some(Layout::new(&windows.feature_columns)?),
        ForecastMode::Direct => None,
    };
    let base = RngStream::new(seed);
    let n = windows.len();
    let chunks = n.div_ceil(CHUNK);
    let parts = map_indexed(exec, chunks, |c| -> Result<Vec<f64>> {
        let idx: Vec<usize> = (c * CHUNK..((c + 1) * CHUNK).min(n)).collect();
        let mut rng = base.fork(c as u64);
        let mut x = windows.input_tensor(&idx);
        let b = idx.len();
        match (&layout, mode) {
            (_, ForecastMode::Direct) => {
                let y = model.predict(&x, &mut rng)?;
                Ok(y.data().chunks(head).flat_map(|r| r[..horizon].iter().copied()).collect())
            }
            (Some(layout), ForecastMode::Iterative) => {
                let mut rollers = idx
                    .iter()
                    .map(|&i| Roller::new(layout, ctx, &windows.feature_columns, &windows.target_column, windows.window(i)))
                    .collect::<Result<Vec<_>>>()?;
                let mut out = vec![0.0; b * horizon];
                for step in 0..horizon {
                    let y = model.predict(&x, &mut rng)?;
                    let mut data = Vec::with_capacity(x.len());
                    for (r, roller) in rollers.iter_mut().enumerate() {
                        let p = y.data()[r * head];
                        out[r * horizon + step] = p;
                        roller.push(p);
                        data.extend(roller.flat());
                    }
                    x = Tensor::new(x.shape().to_vec(), data)?;
                }
                Ok(out)
            }
            (None, ForecastMode::Iterative) => unreachable!("layout is built for iterative mode"),
        }
    });
    let mut predicted_scaled = Vec::with_capacity(n * horizon);
    for p in parts {
        predicted_scaled.extend(p?);
    }
    if predicted_scaled.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{} produced a non-finite prediction", model.name())));
    }
    let tcol = ctx.scaler.column_index(&windows.target_column)?;
    let mut dates = Vec::with_capacity(n * horizon);
    let mut actual_scaled = Vec::with_capacity(n * horizon);
    for i in 0..n {
        dates.extend_from_slice(&windows.target_dates(i)[..horizon]);
        actual_scaled.extend_from_slice(&windows.target(i)[..horizon]);
    }
    let unscale = |v: &[f64]| v.iter().map(|&x| ctx.scaler.unscale(tcol, x)).collect::<Vec<_>>();
    Ok(ForecastResult {
        model: model.name(),
        mode,
        target_column: windows.target_column.clone(),
        horizon,
        dates,
        predicted: unscale(&predicted_scaled),
        actual: unscale(&actual_scaled),
        predicted_scaled,
        actual_scaled,
    })
}

/// Generated sequences in original units, `count x seq_len x columns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub columns: Vec<String>,
    pub count: usize,
    pub seq_len: usize,
    pub data: Vec<f64>,
}

impl SyntheticSample {
    pub fn shape(&self) -> [usize; 3] {
        [self.count, self.seq_len, self.columns.len()]
    }

    /// Every value of one column across all sequences.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .columns
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| Error::invalid(format!("synthetic sample has no column {name}")))?;
        Ok(self.data.chunks(self.columns.len()).map(|r| r[c]).collect())
    }

    /// One row per generated step.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.columns.len()).map(|r| r.to_vec()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("sequence,step,{}\n", self.columns.join(","));
        for (i, r) in self.data.chunks(self.columns.len()).enumerate() {
            let vals: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&format!("{},{},{}\n", i / self.seq_len, i % self.seq_len, vals.join(",")));
        }
        s
    }
}

/// A trained generative model ready to sample.
pub enum Generative<'a> {
    /// Paths conditioned on windows drawn from `conditioning`.
    Gan { model: &'a GanModel, conditioning: &'a WindowDataset },
    TimeGan(&'a TimeGanModel),
}

pub fn generate_synthetic(
    generator: Generative<'_>,
    scaler: &ScalerParams,
    count: usize,
    seq_len: usize,
    seed: u64,
) -> Result<SyntheticSample> {
    if count == 0 || seq_len == 0 {
        return Err(Error::invalid("count and seq_len must be positive"));
    }
    let mut rng = RngStream::new(seed);
    match generator {
        Generative::Gan { model, conditioning } => {
            if !model.generator.params.is_finite() {
                return Err(Error::NonFinite("generator parameters".into()));
            }
            if seq_len > model.head {
                return Err(Error::invalid(format!("GAN paths have {} steps, {seq_len} requested", model.head)));
            }
            if conditioning.is_empty() {
                return Err(Error::data("no conditioning windows"));
            }
            let n = conditioning.len();
            let idx: Vec<usize> = (0..count).map(|_| (rng.uniform(0.0, 1.0) * n as f64) as usize % n).collect();
            let paths = model.generate(&conditioning.input_tensor(&idx), &mut rng)?;
            let col = scaler.column_index(&conditioning.target_column)?;
            let data = paths
                .data()
                .chunks(model.head)
                .flat_map(|p| p[..seq_len].iter().map(|&v| scaler.unscale(col, v)).collect::<Vec<_>>())
                .collect();
            Ok(SyntheticSample { columns: vec![conditioning.target_column.clone()], count, seq_len, data })
        }
        Generative::TimeGan(model) => {
            if model.nets.roles().iter().any(|(_, n)| !n.params.is_finite()) {
                return Err(Error::NonFinite("TimeGAN parameters".into()));
            }
            if seq_len != model.seq_len {
                return Err(Error::invalid(format!("TimeGAN was built for {} steps, {seq_len} requested", model.seq_len)));
            }
            let x = model.sample(count, &mut rng)?;
            let cols = model
                .feature_columns
                .iter()
                .map(|c| scaler.column_index(c))
                .collect::<Result<Vec<_>>>()?;
            let data = x
                .data()
                .chunks(cols.len())
                .flat_map(|r| r.iter().zip(&cols).map(|(&v, &c)| scaler.unscale(c, v)).collect::<Vec<_>>())
                .collect();
            Ok(SyntheticSample { columns: model.feature_columns.clone(), count, seq_len, data })
        }
    }
}
