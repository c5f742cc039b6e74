use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::objectives::LossMode;
use super::trace::{epoch_batches, finite_loss, item, mean_log_prob, EpochRecord, LossTrace, Mean, Phase};
use crate::data::WindowDataset;
use crate::error::{Error, Result};
use crate::models::{discriminator_spec, fit_stride, generator_spec, Head, Network};
use crate::numcore::{
    clip_weights, Direction, Mode, NetworkParams, OptimizerConfig, OptimizerKind, OptimizerState, ParamGrads, RngStream,
    Tape, Tensor, Var,
};

/// Conditional generator plus discriminator (or critic).
///
/// The generator sees each window's features with per-step noise appended and
/// emits a path of `head` scaled target values. The discriminator scores the
/// target-column history followed by a real or generated path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: Network,
    pub discriminator: Network,
    pub latent_dim: usize,
    pub seq_len: usize,
    pub n_features: usize,
    /// Position of the target column among the window features.
    pub history_index: usize,
    pub head: usize,
    pub disc_head: Head,
}

impl GanModel {
    pub fn build(train: &WindowDataset, cfg: &TrainConfig, head: Head, rng: &mut RngStream) -> Result<GanModel> {
        cfg.validate()?;
        let history_index = train.feature_index(&train.target_column)?;
        let (seq, f, h) = (train.seq_len, train.n_features(), train.horizon);
        let g = generator_spec(seq, f, cfg.latent_dim, h, cfg.width_multiplier)?;
        let stride = fit_stride(seq + h, cfg.kernel, cfg.max_stride)?;
        let d = discriminator_spec(seq + h, 1, cfg.kernel, stride, head, cfg.disc_width_multiplier)?;
        Ok(GanModel {
            generator: Network::init(g, &mut rng.fork(0))?,
            discriminator: Network::init(d, &mut rng.fork(1))?,
            latent_dim: cfg.latent_dim,
            seq_len: seq,
            n_features: f,
            history_index,
            head: h,
            disc_head: head,
        })
    }

    fn check_windows(&self, windows: &Tensor) -> Result<usize> {
        let s = windows.shape();
        if s.len() != 3 || s[1] != self.seq_len || s[2] != self.n_features {
            return Err(Error::shape(
                "gan input",
                format!("expected [batch, {}, {}], got {:?}", self.seq_len, self.n_features, s),
            ));
        }
        Ok(s[0])
    }

    /// Windows with `latent_dim` noise channels appended to every step.
    pub fn generator_input(&self, windows: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        let b = self.check_windows(windows)?;
        let (f, l) = (self.n_features, self.latent_dim);
        let mut data = Vec::with_capacity(b * self.seq_len * (f + l));
        for step in windows.data().chunks(f) {
            data.extend_from_slice(step);
            for _ in 0..l {
                data.push(rng.normal());
            }
        }
        Tensor::new(vec![b, self.seq_len, f + l], data)
    }

    /// Target-column history of each window, `[batch, seq_len, 1]`.
    pub fn history(&self, windows: &Tensor) -> Result<Tensor> {
        let b = self.check_windows(windows)?;
        let data = windows.data().chunks(self.n_features).map(|s| s[self.history_index]).collect();
        Tensor::new(vec![b, self.seq_len, 1], data)
    }

    fn disc_input(&self, tape: &mut Tape, history: Var, path: Var) -> Result<Var> {
        let b = tape.shape(path)[0];
        let p = tape.reshape(path, &[b, self.head, 1])?;
        tape.concat(&[history, p], 1)
    }

    /// Generated paths for the given windows in eval mode, `[batch, head]`.
    pub fn generate(&self, windows: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        let x = self.generator_input(windows, rng)?;
        self.generator.forward(&x, Mode::Eval, rng)
    }

    /// Discriminator outputs for history followed by `paths`.
    pub fn score(&self, windows: &Tensor, paths: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.discriminator.bind(&mut tape, false);
        let h = tape.constant(self.history(windows)?);
        let p = tape.constant(paths.clone());
        let x = self.disc_input(&mut tape, h, p)?;
        let mut rng = RngStream::new(0);
        let y = self.discriminator.forward_on(&mut tape, &bound, x, Mode::Eval, &mut rng)?;
        Ok(tape.value(y).clone())
    }
}

struct Streams {
    batches: RngStream,
    noise: RngStream,
    dropout: RngStream,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let root = RngStream::new(seed);
        Streams { batches: root.fork(10), noise: root.fork(11), dropout: root.fork(12) }
    }
}

/// Shared forward pieces of one adversarial step.
struct StepGraph {
    tape: Tape,
    g_bound: crate::models::Bound,
    d_bound: crate::models::Bound,
    d_real: Var,
    d_fake: Var,
}

fn build_step(
    model: &GanModel,
    train: &WindowDataset,
    real_idx: &[usize],
    fake_idx: &[usize],
    train_generator: bool,
    streams: &mut Streams,
) -> Result<StepGraph> {
    let mut tape = Tape::new();
    let g_bound = model.generator.bind(&mut tape, train_generator);
    let d_bound = model.discriminator.bind(&mut tape, !train_generator);

    let real_windows = train.input_tensor(real_idx);
    let hist_real = tape.constant(model.history(&real_windows)?);
    let real_path = tape.constant(train.target_tensor(real_idx, model.head)?);
    let x_real = model.disc_input(&mut tape, hist_real, real_path)?;
    let d_real = model.discriminator.forward_on(&mut tape, &d_bound, x_real, Mode::Train, &mut streams.dropout)?;

    let fake_windows = train.input_tensor(fake_idx);
    let g_in = tape.constant(model.generator_input(&fake_windows, &mut streams.noise)?);
    let fake_path = model.generator.forward_on(&mut tape, &g_bound, g_in, Mode::Train, &mut streams.dropout)?;
    let hist_fake = tape.constant(model.history(&fake_windows)?);
    let x_fake = model.disc_input(&mut tape, hist_fake, fake_path)?;
    let d_fake = model.discriminator.forward_on(&mut tape, &d_bound, x_fake, Mode::Train, &mut streams.dropout)?;
    Ok(StepGraph { tape, g_bound, d_bound, d_real, d_fake })
}

/// Adversarial training: per minibatch one ascent step on the discriminator
/// value, then one generator step under `cfg.loss_mode`.
pub fn train_gan(model: &mut GanModel, train: &WindowDataset, cfg: &TrainConfig) -> Result<LossTrace> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::data("empty training set"));
    }
    if model.disc_head != Head::Sigmoid {
        return Err(Error::invalid("train_gan needs a sigmoid discriminator head"));
    }
    let mut streams = Streams::new(cfg.seed);
    let mut d_opt = OptimizerState::new(OptimizerConfig::new(cfg.optimizer, cfg.d_learning_rate));
    let mut g_opt = OptimizerState::new(OptimizerConfig::new(cfg.optimizer, cfg.g_learning_rate));
    let mut trace = LossTrace::default();
    for epoch in 0..cfg.epochs {
        let (mut gm, mut dm, mut vm) = (Mean::default(), Mean::default(), Mean::default());
        for (b, idx) in epoch_batches(train.len(), cfg.batch_size, &mut streams.batches).iter().enumerate() {
            // discriminator ascent on V
            let StepGraph { mut tape, d_bound, d_real, d_fake, .. } =
                build_step(model, train, idx, idx, false, &mut streams)?;
            let lr = mean_log_prob(&mut tape, d_real, false)?;
            let lf = mean_log_prob(&mut tape, d_fake, true)?;
            let v = tape.add(lr, lf)?;
            let value = finite_loss(item(&tape, v), "V", epoch, b)?;
            let grads = tape.backward(v)?;
            let g = d_bound.grads(&grads, &model.discriminator)?;
            d_opt.step(&mut model.discriminator.params, &g, Direction::Ascend)?;
            vm.add(value);
            dm.add(-0.5 * value);

            // generator step
            let StepGraph { mut tape, g_bound, d_real, d_fake, .. } = build_step(model, train, idx, idx, true, &mut streams)?;
            let (objective, direction) = match cfg.loss_mode {
                LossMode::Minimax => (mean_log_prob(&mut tape, d_fake, true)?, Direction::Descend),
                LossMode::Nonsaturating => (mean_log_prob(&mut tape, d_fake, false)?, Direction::Ascend),
                LossMode::ZeroSum => {
                    let lr = mean_log_prob(&mut tape, d_real, false)?;
                    let lf = mean_log_prob(&mut tape, d_fake, true)?;
                    let s = tape.add(lr, lf)?;
                    (tape.scale(s, 0.5)?, Direction::Descend)
                }
            };
            let raw = item(&tape, objective);
            let g_cost = if cfg.loss_mode == LossMode::Nonsaturating { -raw } else { raw };
            gm.add(finite_loss(g_cost, "generator loss", epoch, b)?);
            let grads = tape.backward(objective)?;
            let g = g_bound.grads(&grads, &model.generator)?;
            g_opt.step(&mut model.generator.params, &g, direction)?;
        }
        trace.push(EpochRecord { epoch, phase: Phase::Adversarial, g_loss: gm.get(), d_loss: dm.get(), value: vm.get() })?;
    }
    Ok(trace)
}

/// One parameter update observed by a WGAN hook.
#[derive(Debug)]
pub enum WganEvent<'a> {
    Critic {
        epoch: usize,
        iteration: usize,
        t: usize,
        /// Gradient of the critic estimate with respect to the critic weights.
        grads: &'a ParamGrads,
        before: &'a NetworkParams,
        after_update: &'a NetworkParams,
        after_clip: &'a NetworkParams,
        clip: f64,
    },
    Generator {
        epoch: usize,
        iteration: usize,
        /// Gradient of `-mean f(g(z))` with respect to the generator weights.
        grads: &'a ParamGrads,
        before: &'a NetworkParams,
        after: &'a NetworkParams,
    },
}

pub type WganHook<'h> = &'h mut dyn FnMut(&WganEvent<'_>);

/// Critic loop: `n_critic` clipped RMSProp ascent steps on the critic estimate,
/// then one RMSProp descent step of the generator on `-mean f(g(z))`.
pub fn train_wgan(model: &mut GanModel, train: &WindowDataset, cfg: &TrainConfig, mut hook: Option<WganHook<'_>>) -> Result<LossTrace> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::data("empty training set"));
    }
    if model.disc_head != Head::Linear {
        return Err(Error::invalid("train_wgan needs a critic with a linear head"));
    }
    let n = train.len();
    let m = cfg.batch_size.min(n);
    let iterations = n.div_ceil(cfg.batch_size);
    let mut streams = Streams::new(cfg.seed);
    let rms = OptimizerConfig::new(OptimizerKind::RmsProp, cfg.wgan_learning_rate);
    let mut c_opt = OptimizerState::new(rms);
    let mut g_opt = OptimizerState::new(rms);
    let mut trace = LossTrace::default();
    for epoch in 0..cfg.epochs {
        let (mut gm, mut em) = (Mean::default(), Mean::default());
        for it in 0..iterations {
            for t in 0..cfg.n_critic {
                let real_idx = streams.batches.sample_indices(n, m);
                let fake_idx = streams.batches.sample_indices(n, m);
                let StepGraph { mut tape, d_bound, d_real, d_fake, .. } =
                    build_step(model, train, &real_idx, &fake_idx, false, &mut streams)?;
                let fr = tape.mean(d_real)?;
                let ff = tape.mean(d_fake)?;
                let est = tape.sub(fr, ff)?;
                em.add(finite_loss(item(&tape, est), "critic estimate", epoch, it)?);
                let grads = tape.backward(est)?;
                let g = d_bound.grads(&grads, &model.discriminator)?;
                let before = hook.as_ref().map(|_| model.discriminator.params.clone());
                c_opt.step(&mut model.discriminator.params, &g, Direction::Ascend)?;
                let after_update = hook.as_ref().map(|_| model.discriminator.params.clone());
                clip_weights(&mut model.discriminator.params, cfg.clip)?;
                if let (Some(h), Some(before), Some(after_update)) = (hook.as_mut(), before, after_update) {
                    h(&WganEvent::Critic {
                        epoch,
                        iteration: it,
                        t,
                        grads: &g,
                        before: &before,
                        after_update: &after_update,
                        after_clip: &model.discriminator.params,
                        clip: cfg.clip,
                    });
                }
            }
            let fake_idx = streams.batches.sample_indices(n, m);
            let StepGraph { mut tape, g_bound, d_fake, .. } = build_step(model, train, &fake_idx, &fake_idx, true, &mut streams)?;
            let ff = tape.mean(d_fake)?;
            let loss = tape.neg(ff)?;
            gm.add(finite_loss(item(&tape, loss), "generator loss", epoch, it)?);
            let grads = tape.backward(loss)?;
            let g = g_bound.grads(&grads, &model.generator)?;
            let before = hook.as_ref().map(|_| model.generator.params.clone());
            g_opt.step(&mut model.generator.params, &g, Direction::Descend)?;
            if let (Some(h), Some(before)) = (hook.as_mut(), before) {
                h(&WganEvent::Generator { epoch, iteration: it, grads: &g, before: &before, after: &model.generator.params });
            }
        }
        let est = em.get();
        trace.push(EpochRecord { epoch, phase: Phase::Critic, g_loss: gm.get(), d_loss: est.map(|e| -e), value: est })?;
    }
    Ok(trace)
}

/// Trains a sigmoid-headed network alone to separate `real` rows from `fake` rows.
pub fn train_discriminator(net: &mut Network, real: &Tensor, fake: &Tensor, cfg: &TrainConfig) -> Result<LossTrace> {
    cfg.validate()?;
    let (nr, nf) = (real.shape()[0], fake.shape()[0]);
    if nr == 0 || nf == 0 {
        return Err(Error::data("empty sample set"));
    }
    let mut streams = Streams::new(cfg.seed);
    let mut opt = OptimizerState::new(OptimizerConfig::new(cfg.optimizer, cfg.d_learning_rate));
    let gather = |t: &Tensor, idx: &[usize]| -> Result<Tensor> {
        let per: usize = t.shape()[1..].iter().product();
        let mut data = Vec::with_capacity(idx.len() * per);
        for &i in idx {
            data.extend_from_slice(&t.data()[i * per..(i + 1) * per]);
        }
        let mut shape = t.shape().to_vec();
        shape[0] = idx.len();
        Tensor::new(shape, data)
    };
    let mut trace = LossTrace::default();
    for epoch in 0..cfg.epochs {
        let rb = epoch_batches(nr, cfg.batch_size, &mut streams.batches);
        let fb = epoch_batches(nf, cfg.batch_size, &mut streams.batches);
        let mut vm = Mean::default();
        for (b, (ri, fi)) in rb.iter().zip(&fb).enumerate() {
            let mut tape = Tape::new();
            let bound = net.bind(&mut tape, true);
            let xr = tape.constant(gather(real, ri)?);
            let xf = tape.constant(gather(fake, fi)?);
            let dr = net.forward_on(&mut tape, &bound, xr, Mode::Train, &mut streams.dropout)?;
            let df = net.forward_on(&mut tape, &bound, xf, Mode::Train, &mut streams.dropout)?;
            let lr = mean_log_prob(&mut tape, dr, false)?;
            let lf = mean_log_prob(&mut tape, df, true)?;
            let v = tape.add(lr, lf)?;
            vm.add(finite_loss(item(&tape, v), "V", epoch, b)?);
            let grads = tape.backward(v)?;
            let g = bound.grads(&grads, net)?;
            opt.step(&mut net.params, &g, Direction::Ascend)?;
        }
        let v = vm.get();
        trace.push(EpochRecord { epoch, phase: Phase::Discriminator, g_loss: None, d_loss: v.map(|v| -0.5 * v), value: v })?;
    }
    Ok(trace)
}
