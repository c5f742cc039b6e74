use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tsgan_core::data::synth::{synth_series, SynthKind};
use tsgan_core::data::{prepare, DataConfig};
use tsgan_core::models::{forecaster_spec, CellKind, Network};
use tsgan_core::numcore::{matmul_with, RngStream};
use tsgan_core::par::{map_indexed, Execution};
use tsgan_core::stats::ks_statistic;
use tsgan_core::training::{forecast, ForecastContext, ForecastMode};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn matmul(c: &mut Criterion) {
    let mut g = c.benchmark_group("matmul");
    let n = 256;
    let mut rng = RngStream::new(0);
    let a = rng.normal_tensor(&[n, n]);
    let b = rng.normal_tensor(&[n, n]);
    let mut out = vec![0.0; n * n];
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, n), &exec, |bch, &exec| {
            bch.iter(|| matmul_with(exec, black_box(a.data()), black_box(b.data()), n, n, n, &mut out))
        });
    }
    g.finish();
}

fn ks_monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("ks_monte_carlo");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(name, |bch| {
            bch.iter(|| {
                map_indexed(exec, 200, |i| {
                    let mut rng = RngStream::new(i as u64);
                    let a: Vec<f64> = (0..500).map(|_| rng.normal()).collect();
                    let b: Vec<f64> = (0..500).map(|_| rng.normal()).collect();
                    ks_statistic(&a, &b)
                })
            })
        });
    }
    g.finish();
}

fn batch_forecast(c: &mut Criterion) {
    let mut g = c.benchmark_group("batch_forecast");
    g.sample_size(10);
    let raw = synth_series(SynthKind::Ar1, 2000, 1).unwrap();
    let p = prepare(&raw, &DataConfig { horizon: 10, ..Default::default() }).unwrap();
    let spec = forecaster_spec(CellKind::Gru, 1, 32, p.test.seq_len, p.test.n_features(), 10).unwrap();
    let net = Network::init(spec, &mut RngStream::new(0)).unwrap();
    let ctx = ForecastContext { scaler: p.scaler.clone(), sma_window: 10 };
    for (name, exec) in MODES {
        g.bench_function(name, |bch| {
            bch.iter(|| forecast(&net, &p.test, 10, ForecastMode::Iterative, &ctx, 0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, matmul, ks_monte_carlo, batch_forecast);
criterion_main!(benches);
