use tsgan_core::data::synth::{synth_series, SynthKind};
use tsgan_core::data::{prepare, DataConfig, PreparedData};
use tsgan_core::eval::{compare_models, horizon_sweep, persistence_baseline, perturbation_study, rmse, Basis, SweepConfig};
use tsgan_core::models::{forecaster_spec, load_checkpoint, save_checkpoint, CellKind, BLOB_FILE, Head, Network};
use tsgan_core::numcore::RngStream;
use tsgan_core::par::Execution;
use tsgan_core::training::{
    forecast, train_forecaster, train_gan, train_timegan, ForecastContext, ForecastMode, GanModel,
    Preset, TimeGanModel, TrainConfig,
};

fn data(horizon: usize) -> PreparedData {
    let raw = synth_series(SynthKind::Ar1, 400, 3).unwrap();
    prepare(&raw, &DataConfig { seq_len: 12, horizon, ..Default::default() }).unwrap()
}

fn ctx(p: &PreparedData) -> ForecastContext {
    ForecastContext { scaler: p.scaler.clone(), sma_window: 10 }
}

fn small(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig { seed, epochs, ..Preset::Desk.config() }
}

fn gru(p: &PreparedData, cfg: &TrainConfig) -> Network {
    let spec = forecaster_spec(CellKind::Gru, 1, 8, 12, p.train.n_features(), p.train.horizon).unwrap();
    let mut net = Network::init(spec, &mut RngStream::new(cfg.seed)).unwrap();
    train_forecaster(&mut net, &p.train, cfg).unwrap();
    net
}

#[test]
fn same_seed_same_weights() {
    let p = data(5);
    assert_eq!(gru(&p, &small(4, 2)).params, gru(&p, &small(4, 2)).params);
    assert_ne!(gru(&p, &small(4, 2)).params, gru(&p, &small(5, 2)).params);

    let cfg = small(9, 2);
    let build = || {
        let mut m = GanModel::build(&p.train, &cfg, Head::Sigmoid, &mut RngStream::new(9)).unwrap();
        let trace = train_gan(&mut m, &p.train, &cfg).unwrap();
        (m.generator.params, m.discriminator.params, trace.to_csv())
    };
    assert_eq!(build(), build());
}

#[test]
fn persistence_repeats_last_observed_close() {
    let p = data(5);
    let r = persistence_baseline(&p.test, 5, &ctx(&p)).unwrap();
    let close = p.test.feature_index("Close").unwrap();
    let f = p.test.n_features();
    for i in 0..p.test.len() {
        let last = p.test.window(i)[(p.test.seq_len - 1) * f + close];
        for s in 0..5 {
            assert_eq!(r.predicted_scaled[i * 5 + s], last);
            assert_eq!(r.actual_scaled[i * 5 + s], p.test.target(i)[s]);
        }
    }
}

#[test]
fn sweep_scores_each_horizon_as_a_prefix() {
    let p = data(8);
    let net = gru(&p, &small(1, 1));
    let sc = SweepConfig { horizons: vec![2, 5, 8], weights: Some(vec![1.0, 2.0, 1.0]), ..Default::default() };
    let rep = horizon_sweep(&net, &p.test, &ctx(&p), &sc, 1, 1, Execution::Sequential).unwrap();
    let full = forecast(&net, &p.test, 8, ForecastMode::Direct, &ctx(&p), 0, Execution::Sequential).unwrap();
    let mut expected = Vec::new();
    for h in [2, 5, 8] {
        let (mut y, mut yh) = (Vec::new(), Vec::new());
        for w in 0..full.windows() {
            y.extend_from_slice(&full.actual_scaled[w * 8..w * 8 + h]);
            yh.extend_from_slice(&full.predicted_scaled[w * 8..w * 8 + h]);
        }
        expected.push(rmse(&y, &yh).unwrap());
    }
    for (m, e) in rep.summary.horizons.iter().zip(&expected) {
        assert!((m.scaled.rmse - e).abs() < 1e-12);
    }
    let weighted = (expected[0] + 2.0 * expected[1] + expected[2]) / 4.0;
    assert!((rep.rmse() - weighted).abs() < 1e-12);
    assert!(rep.baseline.is_some());
}

#[test]
fn execution_mode_does_not_change_results() {
    let p = data(5);
    let net = gru(&p, &small(2, 1));
    let sc = SweepConfig { horizons: vec![5], mode: ForecastMode::Iterative, ..Default::default() };
    let a = horizon_sweep(&net, &p.test, &ctx(&p), &sc, 1, 1, Execution::Sequential).unwrap();
    let b = horizon_sweep(&net, &p.test, &ctx(&p), &sc, 1, 1, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn iterative_first_step_equals_direct_first_step() {
    let p = data(5);
    let net = gru(&p, &small(3, 1));
    let d = forecast(&net, &p.test, 5, ForecastMode::Direct, &ctx(&p), 0, Execution::Sequential).unwrap();
    let i = forecast(&net, &p.test, 5, ForecastMode::Iterative, &ctx(&p), 0, Execution::Sequential).unwrap();
    for w in 0..d.windows() {
        assert_eq!(d.predicted_scaled[w * 5], i.predicted_scaled[w * 5]);
    }
    assert_eq!(d.actual, i.actual);
}

#[test]
fn direct_mode_rejects_horizon_beyond_head() {
    let p = data(5);
    let spec = forecaster_spec(CellKind::Lstm, 1, 4, 12, p.test.n_features(), 2).unwrap();
    let net = Network::init(spec, &mut RngStream::new(0)).unwrap();
    assert!(forecast(&net, &p.test, 5, ForecastMode::Direct, &ctx(&p), 0, Execution::Sequential).is_err());
    assert!(forecast(&net, &p.test, 5, ForecastMode::Iterative, &ctx(&p), 0, Execution::Sequential).is_ok());
}

#[test]
fn comparison_is_permutation_invariant() {
    let p = data(5);
    let sc = SweepConfig { horizons: vec![1, 5], ..Default::default() };
    let reports: Vec<_> = (0..4)
        .map(|s| {
            let mut r = horizon_sweep(&gru(&p, &small(s, 1)), &p.test, &ctx(&p), &sc, 1, 1, Execution::Sequential).unwrap();
            r.model = format!("m{s}");
            r
        })
        .collect();
    let base = compare_models(&reports).unwrap();
    let mut rev = reports.clone();
    rev.reverse();
    assert_eq!(compare_models(&rev).unwrap(), base);
    rev.swap(0, 2);
    assert_eq!(compare_models(&rev).unwrap(), base);
    assert_eq!(base.rows.last().unwrap().model, "persistence");

    let mut mixed = reports;
    mixed[1].basis = Basis::Original;
    assert!(compare_models(&mixed).is_err());
}

#[test]
fn perturbation_grid_is_deterministic_and_isolates_failures() {
    let p = data(5);
    let sc = SweepConfig { horizons: vec![5], ..Default::default() };
    let run = |exec| {
        perturbation_study("GRU", &[1, 2], &[1, 2], 10, exec, |cell| {
            if cell.layers == 2 && cell.epochs == 2 {
                return Err(tsgan_core::Error::Config("forced".into()));
            }
            let cfg = small(cell.seed, cell.epochs);
            let spec = forecaster_spec(CellKind::Gru, cell.layers, 4, 12, p.train.n_features(), 5)?;
            let mut net = Network::init(spec, &mut RngStream::new(cell.seed))?;
            train_forecaster(&mut net, &p.train, &cfg)?;
            horizon_sweep(&net, &p.test, &ctx(&p), &sc, cell.layers, cell.epochs, Execution::Sequential)
        })
        .unwrap()
    };
    let a = run(Execution::Sequential);
    assert_eq!(a, run(Execution::Parallel));
    assert_eq!(a.cells.len(), 4);
    assert!(a.cell(2, 2).unwrap().error.is_some());
    assert!(a.cell(1, 2).unwrap().report.is_some());
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let p = data(5);
    let cfg = TrainConfig { epochs: 2, seed: 6, ..Preset::Desk.config() };
    let mut tg = TimeGanModel::build(&p.train, &cfg, &mut RngStream::new(6)).unwrap();
    train_timegan(&mut tg, &p.train, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let roles = tg.nets.roles();
    save_checkpoint(dir.path(), &roles, 6, 2, serde_json::json!({"k": 1})).unwrap();
    let ck = load_checkpoint(dir.path()).unwrap();
    for (role, net) in roles {
        assert_eq!(ck.network(role).unwrap(), net);
    }
    assert_eq!(ck.meta["k"], 1);

    std::fs::write(dir.path().join(BLOB_FILE), b"corrupted").unwrap();
    assert!(load_checkpoint(dir.path()).is_err());
}
