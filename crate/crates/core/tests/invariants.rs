use proptest::prelude::*;
use tsgan_core::data::synth::{synth_series, SynthKind};
use tsgan_core::data::{pct_change, prepare, split_index, DataConfig};
use tsgan_core::eval::{mape, rmse, weighted_average};
use tsgan_core::numcore::{clip_weights, matmul_with, NetworkParams, Tensor};
use tsgan_core::par::Execution;
use tsgan_core::stats::{ks_p_value, ks_statistic};
use tsgan_core::training::{discriminator_cost, gan_value, jensen_shannon_divergence};

fn dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, len).prop_filter("non-zero mass", |v| v.iter().sum::<f64>() > 1e-6).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn matmul_modes_agree(n in 1usize..12, k in 1usize..12, m in 1usize..12, seed in any::<u64>()) {
        let mut rng = tsgan_core::numcore::RngStream::new(seed);
        let a = rng.normal_tensor(&[n, k]);
        let b = rng.normal_tensor(&[k, m]);
        let mut seq = vec![0.0; n * m];
        let mut par = vec![0.0; n * m];
        matmul_with(Execution::Sequential, a.data(), b.data(), n, k, m, &mut seq);
        matmul_with(Execution::Parallel, a.data(), b.data(), n, k, m, &mut par);
        prop_assert_eq!(&seq, &par);
        for i in 0..n {
            for j in 0..m {
                let want: f64 = (0..k).map(|p| a.data()[i * k + p] * b.data()[p * m + j]).sum();
                prop_assert!((seq[i * m + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jsd_is_bounded_and_symmetric((p, q) in (2usize..8).prop_flat_map(|k| (dist(k), dist(k)))) {
        let pq = jensen_shannon_divergence(&p, &q).unwrap();
        let qp = jensen_shannon_divergence(&q, &p).unwrap();
        prop_assert!((0.0..=std::f64::consts::LN_2).contains(&pq));
        prop_assert!((pq - qp).abs() <= 1e-12);
        prop_assert_eq!(jensen_shannon_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn discriminator_cost_is_half_negated_value(
        real in prop::collection::vec(0.001..0.999f64, 1..40),
        fake in prop::collection::vec(0.001..0.999f64, 1..40),
    ) {
        let v = gan_value(&real, &fake).unwrap();
        prop_assert!(v <= 0.0);
        prop_assert!((discriminator_cost(&real, &fake).unwrap() + v / 2.0).abs() <= 1e-12);
    }

    #[test]
    fn ks_statistic_is_a_symmetric_distance(
        a in prop::collection::vec(-10.0..10.0f64, 1..60),
        b in prop::collection::vec(-10.0..10.0f64, 1..60),
    ) {
        let d = ks_statistic(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a));
        prop_assert_eq!(ks_statistic(&a, &a), 0.0);
        let p = ks_p_value(d, a.len(), b.len());
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn metrics_are_nonnegative_and_zero_on_perfect_fit(
        y in prop::collection::vec(prop_oneof![-5.0..-0.1f64, 0.1..5.0f64], 1..50),
        noise in prop::collection::vec(-1.0..1.0f64, 50),
    ) {
        let yh: Vec<f64> = y.iter().zip(&noise).map(|(a, e)| a + e).collect();
        prop_assert!(rmse(&y, &yh).unwrap() >= 0.0);
        prop_assert!(mape(&y, &yh).unwrap() >= 0.0);
        prop_assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        prop_assert_eq!(mape(&y, &y).unwrap(), 0.0);
        let e_max = y.iter().zip(&yh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(rmse(&y, &yh).unwrap() <= e_max + 1e-12);
    }

    #[test]
    fn weighted_average_lies_between_extremes(
        v in prop::collection::vec(-100.0..100.0f64, 1..10),
        w in prop::collection::vec(0.01..5.0f64, 10),
    ) {
        let avg = weighted_average(&v, &w[..v.len()]).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(avg >= lo - 1e-9 && avg <= hi + 1e-9);
    }

    #[test]
    fn clipping_bounds_every_weight(vals in prop::collection::vec(-5.0..5.0f64, 1..30), c in 0.001..2.0f64) {
        let mut p = NetworkParams::new();
        p.insert("l0.w", Tensor::vector(vals.clone())).unwrap();
        clip_weights(&mut p, c).unwrap();
        prop_assert!(p.max_abs() <= c);
        for (a, b) in p.get("l0.w").unwrap().data().iter().zip(&vals) {
            prop_assert_eq!(*a, b.clamp(-c, c));
        }
    }

    #[test]
    fn split_index_partitions(n in 0usize..100_000, r in 0.0..=1.0f64) {
        let s = split_index(n, r);
        prop_assert!(s <= n);
        prop_assert!((s as f64 - n as f64 * r).abs() < 1.0 + 1e-6);
    }

    #[test]
    fn pct_change_inverts(prev in 0.5..500.0f64, cur in 0.5..500.0f64) {
        let (p, zero_guarded) = pct_change(prev, cur);
        prop_assert!(!zero_guarded);
        prop_assert!((prev * (1.0 + p) - cur).abs() <= 1e-9 * cur);
        prop_assert_eq!(pct_change(0.0, cur), (0.0, true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pipeline_split_never_leaks(rows in 120usize..400, seq in 2usize..20, horizon in 1usize..15, seed in 0u64..1000) {
        let raw = synth_series(SynthKind::Jump, rows, seed).unwrap();
        let cfg = DataConfig { seq_len: seq, horizon, ..Default::default() };
        let p = prepare(&raw, &cfg).unwrap();
        let last_train_target = p.train.target_dates(p.train.len() - 1).last().copied().unwrap();
        prop_assert!(last_train_target < p.test.target_dates(0)[0]);
        prop_assert_eq!(p.test.starts[0] - p.train.starts[p.train.len() - 1], horizon);
        for i in 0..p.train.len() {
            prop_assert!(p.train.window(i).iter().all(|v| v.is_finite()));
        }
        for (j, (&lo, &hi)) in p.scaler.min.iter().zip(&p.scaler.max).enumerate() {
            prop_assert!(lo <= hi, "column {}", j);
        }
    }
}
