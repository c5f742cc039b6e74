use std::path::Path;

use serde::{Deserialize, Serialize};
use tsgan_core::data::synth::{synth_series, SynthKind};
use tsgan_core::data::{
    build_features, default_columns, parse_ohlcv_csv, prepare, prepare_with_scaler, repair_calendar, DataConfig,
    PreparedData, PriceSeries, ScalerParams, RAW_FIELDS,
};
use tsgan_core::eval::{
    compare_models, horizon_sweep, overlay_points, perturbation_study, plot_csv, Basis, MetricsReport, SweepConfig,
};
use tsgan_core::models::{
    forecaster_spec, load_checkpoint, save_checkpoint, CellKind, Head, Network, TimeGanNets, BLOB_FILE, MANIFEST_FILE,
};
use tsgan_core::numcore::RngStream;
use tsgan_core::par::Execution;
use tsgan_core::stats::{
    correlation_cluster, correlation_matrix, describe, describe_table_csv, monthly_aggregate, monthly_csv,
    two_sample_test,
};
use tsgan_core::training::{
    forecast, generate_synthetic, train_forecaster, train_gan, train_timegan, train_wgan, ForecastContext, ForecastMode,
    Forecaster, GanModel, Generative, LossTrace, TimeGanForecaster, TimeGanModel, TrainConfig,
};
use tsgan_core::Error;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::Outputs;
use crate::{BasisArg, CellArg, Command, ModeArg, ModelKind, SynthArg};

const CHECKPOINT_DIR: &str = "checkpoint";

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn load_series(out: &mut Outputs, path: &Path) -> Result<PriceSeries, CliError> {
    let bytes = out.read_input(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Data(format!("{} is not UTF-8", path.display())))?;
    Ok(parse_ohlcv_csv(&text)?)
}

fn ctx(data: &DataConfig, scaler: &ScalerParams) -> ForecastContext {
    ForecastContext { scaler: scaler.clone(), sma_window: data.sma_window }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GanMeta {
    latent_dim: usize,
    seq_len: usize,
    n_features: usize,
    history_index: usize,
    head: usize,
    disc_head: Head,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TimeGanMeta {
    seq_len: usize,
    feature_columns: Vec<String>,
}

/// Everything besides the weights needed to use a checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelMeta {
    model: ModelKind,
    data: DataConfig,
    train: TrainConfig,
    scaler: ScalerParams,
    gan: Option<GanMeta>,
    timegan: Option<TimeGanMeta>,
}

enum Trained {
    Forecaster(Network),
    Gan(GanModel),
    TimeGan(TimeGanModel),
}

impl Trained {
    fn hidden_layers(&self) -> usize {
        match self {
            Trained::Forecaster(n) => n.spec.hidden_layer_count(),
            Trained::Gan(g) => g.generator.spec.hidden_layer_count(),
            Trained::TimeGan(t) => t.nets.generator.spec.hidden_layer_count(),
        }
    }

    fn forecaster(&self, target_index: usize) -> Box<dyn Forecaster + '_> {
        match self {
            Trained::Forecaster(n) => Box::new(n.clone()),
            Trained::Gan(g) => Box::new(g.clone()),
            Trained::TimeGan(t) => Box::new(TimeGanForecaster { model: t, target_index }),
        }
    }
}

fn load_model(out: &mut Outputs, dir: &Path) -> Result<(ModelMeta, Trained), CliError> {
    for f in [MANIFEST_FILE, BLOB_FILE] {
        out.read_input(&dir.join(f))?;
    }
    let ck = load_checkpoint(dir)?;
    let meta: ModelMeta = serde_json::from_value(ck.meta.clone())
        .map_err(|e| Error::Data(format!("checkpoint metadata: {e}")))?;
    let net = |role: &str| -> Result<Network, CliError> { Ok(ck.network(role)?.clone()) };
    let trained = match meta.model {
        ModelKind::Gru | ModelKind::Lstm => Trained::Forecaster(net("forecaster")?),
        ModelKind::Gan | ModelKind::Wgan => {
            let g = meta.gan.as_ref().ok_or_else(|| Error::Data("checkpoint lacks generator geometry".into()))?;
            Trained::Gan(GanModel {
                generator: net("generator")?,
                discriminator: net("discriminator")?,
                latent_dim: g.latent_dim,
                seq_len: g.seq_len,
                n_features: g.n_features,
                history_index: g.history_index,
                head: g.head,
                disc_head: g.disc_head,
            })
        }
        ModelKind::Timegan => {
            let t = meta.timegan.as_ref().ok_or_else(|| Error::Data("checkpoint lacks TimeGAN geometry".into()))?;
            Trained::TimeGan(TimeGanModel {
                nets: TimeGanNets {
                    embedder: net("embedder")?,
                    recovery: net("recovery")?,
                    generator: net("generator")?,
                    supervisor: net("supervisor")?,
                    discriminator: net("discriminator")?,
                },
                seq_len: t.seq_len,
                feature_columns: t.feature_columns.clone(),
            })
        }
    };
    Ok((meta, trained))
}

fn mode_of(m: ModeArg) -> ForecastMode {
    match m {
        ModeArg::Direct => ForecastMode::Direct,
        ModeArg::Iterative => ForecastMode::Iterative,
    }
}

/// Direct mode is only possible when the head covers the horizon.
fn effective_mode(requested: ForecastMode, head: usize, horizon: usize) -> ForecastMode {
    if requested == ForecastMode::Direct && head < horizon {
        ForecastMode::Iterative
    } else {
        requested
    }
}

fn sweep(cfg: &RunConfig, horizons: Option<&Vec<usize>>, basis: Option<BasisArg>, mode: Option<ModeArg>) -> SweepConfig {
    SweepConfig {
        horizons: horizons.cloned().unwrap_or_else(|| cfg.eval.horizons.clone()),
        weights: if horizons.is_some() { None } else { cfg.eval.weights.clone() },
        mode: mode.map(mode_of).unwrap_or(cfg.eval.mode),
        basis: match basis {
            Some(BasisArg::Scaled) => Basis::Scaled,
            Some(BasisArg::Original) => Basis::Original,
            None => cfg.eval.basis,
        },
        seed: cfg.train.seed,
        with_baseline: cfg.eval.baseline,
    }
}

fn evaluate_model(
    label: &str,
    trained: &Trained,
    prepared: &PreparedData,
    data: &DataConfig,
    epochs: usize,
    mut sc: SweepConfig,
) -> Result<MetricsReport, CliError> {
    let target = prepared.test.feature_index(&prepared.test.target_column)?;
    let model = trained.forecaster(target);
    let max_h = sc.horizons.iter().copied().max().unwrap_or(0);
    sc.mode = effective_mode(sc.mode, model.head(), max_h);
    let mut report = horizon_sweep(
        model.as_ref(),
        &prepared.test,
        &ctx(data, &prepared.scaler),
        &sc,
        trained.hidden_layers(),
        epochs,
        Execution::default(),
    )?;
    report.model = label.to_string();
    Ok(report)
}

fn compare_reports(out: &mut Outputs, paths: &[std::path::PathBuf]) -> Result<(), CliError> {
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let bytes = out.read_input(p)?;
        let r: MetricsReport = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Data(format!("{} is not a metrics report: {e}", p.display())))?;
        reports.push(r);
    }
    let table = compare_models(&reports)?;
    out.write("comparison.csv", table.to_csv().as_bytes())?;
    out.write("comparison.json", (table.to_json()? + "\n").as_bytes())?;
    Ok(())
}

fn train(kind: ModelKind, prepared: &PreparedData, cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let t = &cfg.train;
    let mut rng = RngStream::new(t.seed);
    let (nf, seq, h) = (prepared.train.n_features(), prepared.train.seq_len, prepared.train.horizon);
    let mut meta = ModelMeta {
        model: kind,
        data: cfg.data.clone(),
        train: t.clone(),
        scaler: prepared.scaler.clone(),
        gan: None,
        timegan: None,
    };
    let dir = out.dir.join(CHECKPOINT_DIR);
    let (trace, params): (LossTrace, usize) = match kind {
        ModelKind::Gru | ModelKind::Lstm => {
            let cell = if kind == ModelKind::Gru { CellKind::Gru } else { CellKind::Lstm };
            let spec = forecaster_spec(cell, t.forecaster_layers, t.forecaster_units, seq, nf, h)?;
            let mut net = Network::init(spec, &mut rng)?;
            let trace = train_forecaster(&mut net, &prepared.train, t)?;
            save_checkpoint(&dir, &[("forecaster", &net)], t.seed, t.epochs as u64, serde_json::to_value(&meta)?)?;
            (trace, net.param_count())
        }
        ModelKind::Gan | ModelKind::Wgan => {
            let head = if kind == ModelKind::Gan { Head::Sigmoid } else { Head::Linear };
            let mut m = GanModel::build(&prepared.train, t, head, &mut rng)?;
            let trace = if kind == ModelKind::Gan {
                train_gan(&mut m, &prepared.train, t)?
            } else {
                train_wgan(&mut m, &prepared.train, t, None)?
            };
            meta.gan = Some(GanMeta {
                latent_dim: m.latent_dim,
                seq_len: m.seq_len,
                n_features: m.n_features,
                history_index: m.history_index,
                head: m.head,
                disc_head: m.disc_head,
            });
            let nets = [("generator", &m.generator), ("discriminator", &m.discriminator)];
            save_checkpoint(&dir, &nets, t.seed, t.epochs as u64, serde_json::to_value(&meta)?)?;
            (trace, m.generator.param_count() + m.discriminator.param_count())
        }
        ModelKind::Timegan => {
            let mut m = TimeGanModel::build(&prepared.train, t, &mut rng)?;
            let trace = train_timegan(&mut m, &prepared.train, t)?;
            meta.timegan = Some(TimeGanMeta { seq_len: m.seq_len, feature_columns: m.feature_columns.clone() });
            save_checkpoint(&dir, &m.nets.roles(), t.seed, t.epochs as u64, serde_json::to_value(&meta)?)?;
            (trace, m.nets.roles().iter().map(|(_, n)| n.param_count()).sum())
        }
    };
    out.record(&format!("{CHECKPOINT_DIR}/{MANIFEST_FILE}"))?;
    out.record(&format!("{CHECKPOINT_DIR}/{BLOB_FILE}"))?;
    out.write("loss_trace.csv", trace.to_csv().as_bytes())?;
    let summary = serde_json::json!({
        "model": kind.label(),
        "epochs": t.epochs,
        "parameters": params,
        "train_windows": prepared.train.len(),
        "final": trace.last(),
    });
    out.write("train.json", &json(&summary)?)?;
    Ok(())
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    match cmd {
        Command::SynthData { kind, rows } => {
            let (k, name) = match kind {
                SynthArg::Jump => (SynthKind::Jump, "jump"),
                SynthArg::Sine => (SynthKind::Sine, "sine"),
                SynthArg::Ar1 => (SynthKind::Ar1, "ar1"),
            };
            let series = synth_series(k, *rows, cfg.train.seed)?;
            out.write(&format!("synth_{name}.csv"), series.to_csv()?.as_bytes())?;
        }
        Command::Ingest { input } => {
            let raw = load_series(out, input)?;
            let repaired = repair_calendar(&raw, cfg.data.knn_k)?;
            out.write("repaired.csv", repaired.to_csv()?.as_bytes())?;
            let summary = serde_json::json!({
                "source_rows": raw.len(),
                "repaired_rows": repaired.len(),
                "provenance": repaired.provenance,
            });
            out.write("ingest.json", &json(&summary)?)?;
        }
        Command::Stats { input, against, alpha } => {
            let raw = load_series(out, input)?;
            let repaired = repair_calendar(&raw, cfg.data.knn_k)?;
            let names: Vec<String> = RAW_FIELDS.iter().map(|s| s.to_string()).collect();
            let stats = (0..RAW_FIELDS.len()).map(|f| describe(&repaired.column(f))).collect::<Result<Vec<_>, _>>()?;
            out.write("describe.csv", describe_table_csv(&names, &stats)?.as_bytes())?;
            let features = build_features(&repaired, cfg.data.sma_window)?;
            let corr = correlation_matrix(&features, &default_columns())?;
            out.write("correlation.csv", corr.to_csv(None)?.as_bytes())?;
            let tree = correlation_cluster(&corr)?;
            out.write("clusters.json", &json(&tree.to_nested_json())?)?;
            out.write("monthly.csv", monthly_csv(&monthly_aggregate(&repaired)?)?.as_bytes())?;
            if let Some(other) = against {
                let second = repair_calendar(&load_series(out, other)?, cfg.data.knn_k)?;
                let f2 = build_features(&second, cfg.data.sma_window)?;
                let rows = |f: &tsgan_core::data::FeatureMatrix| (0..f.n_rows()).map(|r| f.row(r).to_vec()).collect::<Vec<_>>();
                let test = two_sample_test(&rows(&features), &rows(&f2), *alpha)?;
                out.write("two_sample.json", &json(&test)?)?;
            }
        }
        Command::Features { input } => {
            let raw = load_series(out, input)?;
            let p = prepare(&raw, &cfg.data)?;
            out.write("features.csv", p.features.to_csv()?.as_bytes())?;
            out.write("scaled.csv", p.scaled.to_csv()?.as_bytes())?;
            out.write("scaler.json", &json(&p.scaler)?)?;
            out.write("dataset.json", &json(&p.manifest)?)?;
        }
        Command::Train { model, input } => {
            let raw = load_series(out, input)?;
            let p = prepare(&raw, &cfg.data)?;
            train(*model, &p, cfg, out)?;
        }
        Command::Forecast { checkpoint, input, horizon, mode } => {
            let (meta, trained) = load_model(out, checkpoint)?;
            let raw = load_series(out, input)?;
            let p = prepare_with_scaler(&raw, &meta.data, &meta.scaler)?;
            let h = horizon.unwrap_or(meta.data.horizon);
            let target = p.test.feature_index(&p.test.target_column)?;
            let model = trained.forecaster(target);
            let m = effective_mode(mode.map(mode_of).unwrap_or(cfg.eval.mode), model.head(), h);
            let mut result =
                forecast(model.as_ref(), &p.test, h, m, &ctx(&meta.data, &p.scaler), cfg.train.seed, Execution::default())?;
            result.model = meta.model.label().to_string();
            out.write("forecast.csv", result.to_csv().as_bytes())?;
            let pts = overlay_points(&result, 1)?;
            out.write("overlay_actual.csv", plot_csv(pts.iter().map(|&(d, a, _)| (d, a))).as_bytes())?;
            out.write("overlay_predicted.csv", plot_csv(pts.iter().map(|&(d, _, f)| (d, f))).as_bytes())?;
        }
        Command::Generate { checkpoint, input, count, seq_len } => {
            let (meta, trained) = load_model(out, checkpoint)?;
            let raw = load_series(out, input)?;
            let p = prepare_with_scaler(&raw, &meta.data, &meta.scaler)?;
            let n = count.unwrap_or(p.train.len());
            let sample = match &trained {
                Trained::Gan(g) => generate_synthetic(
                    Generative::Gan { model: g, conditioning: &p.train },
                    &p.scaler,
                    n,
                    seq_len.unwrap_or(g.head),
                    cfg.train.seed,
                )?,
                Trained::TimeGan(t) => {
                    generate_synthetic(Generative::TimeGan(t), &p.scaler, n, seq_len.unwrap_or(t.seq_len), cfg.train.seed)?
                }
                Trained::Forecaster(_) => {
                    return Err(CliError::Usage(format!("{} checkpoints cannot generate samples", meta.model.label())))
                }
            };
            out.write("synthetic.csv", sample.to_csv().as_bytes())?;
        }
        Command::Evaluate { checkpoint, input, reports, horizons, basis, mode } => match (checkpoint, input) {
            (Some(ck), Some(inp)) => {
                let (meta, trained) = load_model(out, ck)?;
                let raw = load_series(out, inp)?;
                let p = prepare_with_scaler(&raw, &meta.data, &meta.scaler)?;
                let sc = sweep(cfg, horizons.as_ref(), *basis, *mode);
                let report = evaluate_model(meta.model.label(), &trained, &p, &meta.data, meta.train.epochs, sc)?;
                out.write("metrics.json", &json(&report)?)?;
            }
            _ => compare_reports(out, reports)?,
        },
        Command::Compare { reports } => compare_reports(out, reports)?,
        Command::Perturb { model, input, layers, epochs } => {
            let raw = load_series(out, input)?;
            let p = prepare(&raw, &cfg.data)?;
            let (cell, label) = match model {
                CellArg::Gru => (CellKind::Gru, ModelKind::Gru.label()),
                CellArg::Lstm => (CellKind::Lstm, ModelKind::Lstm.label()),
            };
            let sc = sweep(cfg, None, None, None);
            if sc.horizons.iter().any(|&h| h > p.train.horizon) {
                return Err(CliError::Usage(format!(
                    "eval horizons {:?} exceed the data horizon {}",
                    sc.horizons, p.train.horizon
                )));
            }
            let (nf, seq, h) = (p.train.n_features(), p.train.seq_len, p.train.horizon);
            let grid = perturbation_study(label, layers, epochs, cfg.train.seed, Execution::default(), |c| {
                let t = TrainConfig { epochs: c.epochs, seed: c.seed, forecaster_layers: c.layers, ..cfg.train.clone() };
                let spec = forecaster_spec(cell, c.layers, t.forecaster_units, seq, nf, h)?;
                let mut net = Network::init(spec, &mut RngStream::new(c.seed))?;
                train_forecaster(&mut net, &p.train, &t)?;
                let trained = Trained::Forecaster(net);
                evaluate_model(label, &trained, &p, &cfg.data, c.epochs, SweepConfig { seed: c.seed, ..sc.clone() })
                    .map_err(|e| match e {
                        CliError::Core(e) => e,
                        CliError::Usage(m) => Error::Config(m),
                    })
            })?;
            out.write("perturbation.csv", grid.to_csv().as_bytes())?;
            out.write("perturbation.json", &json(&grid)?)?;
        }
    }
    Ok(())
}
