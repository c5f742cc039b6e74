use tsgan_core::models::{gru_cell_forward, lstm_cell_forward, Activation, LayerSpec, NetSpec, Network};
use tsgan_core::numcore::{Mode, NetworkParams, RngStream, Tensor};

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// v @ W + b with W stored [in, out]
fn affine(p: &NetworkParams, w: &str, b: &str, v: &[f64]) -> Vec<f64> {
    let (w, b) = (p.get(w).unwrap(), p.get(b).unwrap());
    let out = w.shape()[1];
    (0..out)
        .map(|j| b.data()[j] + v.iter().enumerate().map(|(i, x)| x * w.data()[i * out + j]).sum::<f64>())
        .collect()
}

fn cat(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

fn gru_oracle(p: &NetworkParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    let xh = cat(x, h);
    let z: Vec<f64> = affine(p, "l0.w_z", "l0.b_z", &xh).into_iter().map(sig).collect();
    let r: Vec<f64> = affine(p, "l0.w_r", "l0.b_r", &xh).into_iter().map(sig).collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = affine(p, "l0.w_h", "l0.b_h", &cat(x, &rh)).into_iter().map(f64::tanh).collect();
    (0..h.len()).map(|j| (1.0 - z[j]) * cand[j] + z[j] * h[j]).collect()
}

fn lstm_oracle(p: &NetworkParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let xh = cat(x, h);
    let f: Vec<f64> = affine(p, "l0.w_f", "l0.b_f", &xh).into_iter().map(sig).collect();
    let i: Vec<f64> = affine(p, "l0.w_i", "l0.b_i", &xh).into_iter().map(sig).collect();
    let o: Vec<f64> = affine(p, "l0.w_o", "l0.b_o", &xh).into_iter().map(sig).collect();
    let g: Vec<f64> = affine(p, "l0.w_g", "l0.b_g", &xh).into_iter().map(f64::tanh).collect();
    let c2: Vec<f64> = (0..c.len()).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
    let h2 = (0..c.len()).map(|j| o[j] * c2[j].tanh()).collect();
    (h2, c2)
}

fn net(cell: LayerSpec, seq: usize, features: usize, seed: u64) -> Network {
    let spec = NetSpec {
        name: "cell".into(),
        seq_len: Some(seq),
        input_features: features,
        layers: vec![cell, LayerSpec::LastStep],
    };
    Network::init(spec, &mut RngStream::new(seed)).unwrap()
}

#[test]
fn gru_step_matches_hand_computation() {
    let mut rng = RngStream::new(1);
    for seed in 0..10 {
        let n = net(LayerSpec::Gru { units: 4 }, 1, 3, seed);
        let x: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let h: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let got = gru_cell_forward(&n.params, 0, &x, &h).unwrap();
        for (a, b) in got.iter().zip(gru_oracle(&n.params, &x, &h)) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }
}

#[test]
fn lstm_step_matches_hand_computation() {
    let mut rng = RngStream::new(2);
    for seed in 0..10 {
        let n = net(LayerSpec::Lstm { units: 3 }, 1, 2, seed);
        let x: Vec<f64> = (0..2).map(|_| rng.normal()).collect();
        let h: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let (gh, gc) = lstm_cell_forward(&n.params, 0, &x, &h, &c).unwrap();
        let (oh, oc) = lstm_oracle(&n.params, &x, &h, &c);
        for (a, b) in gh.iter().chain(&gc).zip(oh.iter().chain(&oc)) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }
}

#[test]
fn unrolled_sequence_matches_network_forward() {
    let (seq, f, u) = (6, 3, 5);
    let gru = net(LayerSpec::Gru { units: u }, seq, f, 7);
    let lstm = net(LayerSpec::Lstm { units: u }, seq, f, 8);
    let mut rng = RngStream::new(3);
    let x = rng.normal_tensor(&[2, seq, f]);
    let yg = gru.forward(&x, Mode::Eval, &mut rng).unwrap();
    let yl = lstm.forward(&x, Mode::Eval, &mut rng).unwrap();
    for b in 0..2 {
        let (mut hg, mut hl, mut cl) = (vec![0.0; u], vec![0.0; u], vec![0.0; u]);
        for t in 0..seq {
            let xt = &x.data()[(b * seq + t) * f..(b * seq + t + 1) * f];
            hg = gru_oracle(&gru.params, xt, &hg);
            (hl, cl) = lstm_oracle(&lstm.params, xt, &hl, &cl);
        }
        for j in 0..u {
            assert!((yg.data()[b * u + j] - hg[j]).abs() < 1e-12);
            assert!((yl.data()[b * u + j] - hl[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn conv_output_length_follows_valid_padding() {
    for (len, kernel, stride) in [(10, 3, 1), (10, 3, 2), (30, 5, 3), (7, 7, 1), (9, 2, 4)] {
        let spec = NetSpec {
            name: "conv".into(),
            seq_len: Some(len),
            input_features: 2,
            layers: vec![LayerSpec::Conv1d { filters: 3, kernel, stride, activation: Activation::Linear }],
        };
        let n = Network::init(spec, &mut RngStream::new(0)).unwrap();
        let y = n.forward(&Tensor::zeros(&[1, len, 2]), Mode::Eval, &mut RngStream::new(0)).unwrap();
        assert_eq!(y.shape(), &[1, (len - kernel) / stride + 1, 3]);
    }
}

#[test]
fn conv_too_short_is_rejected() {
    let spec = NetSpec {
        name: "conv".into(),
        seq_len: Some(2),
        input_features: 1,
        layers: vec![LayerSpec::Conv1d { filters: 1, kernel: 3, stride: 1, activation: Activation::Relu }],
    };
    assert!(Network::init(spec, &mut RngStream::new(0)).is_err());
}

#[test]
fn dropout_is_identity_in_eval_and_scaled_in_train() {
    let spec = NetSpec {
        name: "drop".into(),
        seq_len: None,
        input_features: 4000,
        layers: vec![LayerSpec::Dropout { rate: 0.25 }],
    };
    let n = Network::init(spec, &mut RngStream::new(0)).unwrap();
    let x = Tensor::full(&[1, 4000], 1.0);
    assert_eq!(n.forward(&x, Mode::Eval, &mut RngStream::new(1)).unwrap(), x);
    let y = n.forward(&x, Mode::Train, &mut RngStream::new(1)).unwrap();
    let kept = y.data().iter().filter(|&&v| v != 0.0).count();
    assert!(y.data().iter().all(|&v| v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-12));
    assert!((kept as f64 / 4000.0 - 0.75).abs() < 0.03);
}
