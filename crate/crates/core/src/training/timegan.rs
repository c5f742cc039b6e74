use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::trace::{epoch_batches, finite_loss, item, mean_log_prob, mse, EpochRecord, LossTrace, Mean, Phase};
use crate::data::WindowDataset;
use crate::error::{Error, Result};
use crate::models::{build_timegan, Bound, Network, TimeGanNets};
use crate::numcore::{Direction, Mode, OptimizerConfig, OptimizerState, RngStream, Tape, Tensor, Var};

/// The five TimeGAN sub-networks with the window geometry they were built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGanModel {
    pub nets: TimeGanNets,
    pub seq_len: usize,
    pub feature_columns: Vec<String>,
}

impl TimeGanModel {
    pub fn build(train: &WindowDataset, cfg: &TrainConfig, rng: &mut RngStream) -> Result<TimeGanModel> {
        cfg.validate()?;
        if train.seq_len < 2 {
            return Err(Error::invalid("TimeGAN needs windows of at least two steps"));
        }
        let nets = build_timegan(train.seq_len, train.n_features(), cfg.timegan_hidden, cfg.timegan_layers, rng)?;
        Ok(TimeGanModel { nets, seq_len: train.seq_len, feature_columns: train.feature_columns.clone() })
    }

    pub fn n_features(&self) -> usize {
        self.feature_columns.len()
    }

    /// Synthetic scaled sequences from noise: recovery(supervisor(generator(z))).
    pub fn sample(&self, count: usize, rng: &mut RngStream) -> Result<Tensor> {
        let z = rng.normal_tensor(&[count, self.seq_len, self.n_features()]);
        let e = self.nets.generator.forward(&z, Mode::Eval, rng)?;
        let h = self.nets.supervisor.forward(&e, Mode::Eval, rng)?;
        self.nets.recovery.forward(&h, Mode::Eval, rng)
    }

    /// One-step-ahead reconstruction of real windows: recovery(supervisor(embedder(x))).
    pub fn one_step(&self, windows: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        let h = self.nets.embedder.forward(windows, Mode::Eval, rng)?;
        let s = self.nets.supervisor.forward(&h, Mode::Eval, rng)?;
        self.nets.recovery.forward(&s, Mode::Eval, rng)
    }
}

fn shifted_mse(tape: &mut Tape, pred: Var, target: Var) -> Result<Var> {
    let len = tape.shape(pred)[1];
    let p = tape.slice(pred, 1, 0, len - 1)?;
    let t = tape.slice(target, 1, 1, len)?;
    mse(tape, p, t)
}

struct Opts {
    e: OptimizerState,
    r: OptimizerState,
    g: OptimizerState,
    s: OptimizerState,
    d: OptimizerState,
}

fn apply(opt: &mut OptimizerState, net: &mut Network, bound: &Bound, grads: &crate::numcore::Gradients, dir: Direction) -> Result<()> {
    let g = bound.grads(grads, net)?;
    opt.step(&mut net.params, &g, dir)
}

/// Three sequential phases: autoencoder reconstruction, supervised latent
/// dynamics, then joint adversarial training.
pub fn train_timegan(model: &mut TimeGanModel, train: &WindowDataset, cfg: &TrainConfig) -> Result<LossTrace> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::data("empty training set"));
    }
    if train.seq_len != model.seq_len || train.feature_columns != model.feature_columns {
        return Err(Error::invalid("training windows do not match the TimeGAN geometry"));
    }
    let root = RngStream::new(cfg.seed);
    let (mut batch_rng, mut noise_rng, mut drop_rng) = (root.fork(20), root.fork(21), root.fork(22));
    let oc = OptimizerConfig::new(cfg.optimizer, cfg.g_learning_rate);
    let mut opts = Opts {
        e: OptimizerState::new(oc),
        r: OptimizerState::new(oc),
        g: OptimizerState::new(oc),
        s: OptimizerState::new(oc),
        d: OptimizerState::new(OptimizerConfig::new(cfg.optimizer, cfg.d_learning_rate)),
    };
    let [p1, p2, p3] = cfg.timegan_phase_epochs();
    let (n, f, seq) = (train.len(), model.n_features(), model.seq_len);
    let nets = &mut model.nets;
    let mut trace = LossTrace::default();
    let mut epoch = 0;

    for _ in 0..p1 {
        let mut lm = Mean::default();
        for (b, idx) in epoch_batches(n, cfg.batch_size, &mut batch_rng).iter().enumerate() {
            let mut tape = Tape::new();
            let eb = nets.embedder.bind(&mut tape, true);
            let rb = nets.recovery.bind(&mut tape, true);
            let x = tape.constant(train.input_tensor(idx));
            let h = nets.embedder.forward_on(&mut tape, &eb, x, Mode::Train, &mut drop_rng)?;
            let xt = nets.recovery.forward_on(&mut tape, &rb, h, Mode::Train, &mut drop_rng)?;
            let loss = mse(&mut tape, xt, x)?;
            lm.add(finite_loss(item(&tape, loss), "reconstruction loss", epoch, b)?);
            let grads = tape.backward(loss)?;
            apply(&mut opts.e, &mut nets.embedder, &eb, &grads, Direction::Descend)?;
            apply(&mut opts.r, &mut nets.recovery, &rb, &grads, Direction::Descend)?;
        }
        trace.push(EpochRecord { epoch, phase: Phase::Reconstruction, g_loss: lm.get(), d_loss: None, value: None })?;
        epoch += 1;
    }

    for _ in 0..p2 {
        let mut lm = Mean::default();
        for (b, idx) in epoch_batches(n, cfg.batch_size, &mut batch_rng).iter().enumerate() {
            let mut tape = Tape::new();
            let eb = nets.embedder.bind(&mut tape, false);
            let sb = nets.supervisor.bind(&mut tape, true);
            let x = tape.constant(train.input_tensor(idx));
            let h = nets.embedder.forward_on(&mut tape, &eb, x, Mode::Train, &mut drop_rng)?;
            let hs = nets.supervisor.forward_on(&mut tape, &sb, h, Mode::Train, &mut drop_rng)?;
            let loss = shifted_mse(&mut tape, hs, h)?;
            lm.add(finite_loss(item(&tape, loss), "supervised loss", epoch, b)?);
            let grads = tape.backward(loss)?;
            apply(&mut opts.s, &mut nets.supervisor, &sb, &grads, Direction::Descend)?;
        }
        trace.push(EpochRecord { epoch, phase: Phase::Supervisor, g_loss: lm.get(), d_loss: None, value: None })?;
        epoch += 1;
    }

    for _ in 0..p3 {
        let (mut gm, mut dm, mut vm) = (Mean::default(), Mean::default(), Mean::default());
        for (b, idx) in epoch_batches(n, cfg.batch_size, &mut batch_rng).iter().enumerate() {
            let bs = idx.len();
            let z = noise_rng.normal_tensor(&[bs, seq, f]);

            // generator side: G, S, E, R against a frozen discriminator
            let mut tape = Tape::new();
            let gb = nets.generator.bind(&mut tape, true);
            let sb = nets.supervisor.bind(&mut tape, true);
            let eb = nets.embedder.bind(&mut tape, true);
            let rb = nets.recovery.bind(&mut tape, true);
            let db = nets.discriminator.bind(&mut tape, false);
            let x = tape.constant(train.input_tensor(idx));
            let zv = tape.constant(z.clone());
            let e_hat = nets.generator.forward_on(&mut tape, &gb, zv, Mode::Train, &mut drop_rng)?;
            let h_hat = nets.supervisor.forward_on(&mut tape, &sb, e_hat, Mode::Train, &mut drop_rng)?;
            let logit_fake = nets.discriminator.forward_on(&mut tape, &db, h_hat, Mode::Train, &mut drop_rng)?;
            let p_fake = tape.sigmoid(logit_fake)?;
            let adv = mean_log_prob(&mut tape, p_fake, false)?;
            let adv = tape.neg(adv)?;
            let h = nets.embedder.forward_on(&mut tape, &eb, x, Mode::Train, &mut drop_rng)?;
            let hs = nets.supervisor.forward_on(&mut tape, &sb, h, Mode::Train, &mut drop_rng)?;
            let sup = shifted_mse(&mut tape, hs, h)?;
            let xt = nets.recovery.forward_on(&mut tape, &rb, h, Mode::Train, &mut drop_rng)?;
            let rec = mse(&mut tape, xt, x)?;
            let sup_w = tape.scale(sup, cfg.timegan_lambda)?;
            let rec_w = tape.scale(rec, cfg.timegan_eta)?;
            let total = tape.add(adv, sup_w)?;
            let total = tape.add(total, rec_w)?;
            gm.add(finite_loss(item(&tape, total), "joint loss", epoch, b)?);
            let grads = tape.backward(total)?;
            apply(&mut opts.g, &mut nets.generator, &gb, &grads, Direction::Descend)?;
            apply(&mut opts.s, &mut nets.supervisor, &sb, &grads, Direction::Descend)?;
            apply(&mut opts.e, &mut nets.embedder, &eb, &grads, Direction::Descend)?;
            apply(&mut opts.r, &mut nets.recovery, &rb, &grads, Direction::Descend)?;

            // discriminator ascent on latent sequences
            let mut tape = Tape::new();
            let gb = nets.generator.bind(&mut tape, false);
            let sb = nets.supervisor.bind(&mut tape, false);
            let eb = nets.embedder.bind(&mut tape, false);
            let db = nets.discriminator.bind(&mut tape, true);
            let x = tape.constant(train.input_tensor(idx));
            let zv = tape.constant(z);
            let h = nets.embedder.forward_on(&mut tape, &eb, x, Mode::Train, &mut drop_rng)?;
            let e_hat = nets.generator.forward_on(&mut tape, &gb, zv, Mode::Train, &mut drop_rng)?;
            let h_hat = nets.supervisor.forward_on(&mut tape, &sb, e_hat, Mode::Train, &mut drop_rng)?;
            let lr = nets.discriminator.forward_on(&mut tape, &db, h, Mode::Train, &mut drop_rng)?;
            let lf = nets.discriminator.forward_on(&mut tape, &db, h_hat, Mode::Train, &mut drop_rng)?;
            let pr = tape.sigmoid(lr)?;
            let pf = tape.sigmoid(lf)?;
            let a = mean_log_prob(&mut tape, pr, false)?;
            let c = mean_log_prob(&mut tape, pf, true)?;
            let v = tape.add(a, c)?;
            let value = finite_loss(item(&tape, v), "V", epoch, b)?;
            vm.add(value);
            dm.add(-0.5 * value);
            let grads = tape.backward(v)?;
            apply(&mut opts.d, &mut nets.discriminator, &db, &grads, Direction::Ascend)?;
        }
        trace.push(EpochRecord { epoch, phase: Phase::Joint, g_loss: gm.get(), d_loss: dm.get(), value: vm.get() })?;
        epoch += 1;
    }
    Ok(trace)
}
