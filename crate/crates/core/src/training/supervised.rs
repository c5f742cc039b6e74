use super::config::TrainConfig;
use super::trace::{epoch_batches, finite_loss, item, mse, EpochRecord, LossTrace, Mean, Phase};
use crate::data::WindowDataset;
use crate::error::{Error, Result};
use crate::models::{FlowShape, Network};
use crate::numcore::{Direction, Mode, OptimizerConfig, OptimizerState, RngStream, Tape, Tensor};

fn rows(t: &Tensor, idx: &[usize]) -> Tensor {
    let per: usize = t.shape()[1..].iter().product();
    let mut data = Vec::with_capacity(idx.len() * per);
    for &i in idx {
        data.extend_from_slice(&t.data()[i * per..(i + 1) * per]);
    }
    let mut shape = t.shape().to_vec();
    shape[0] = idx.len();
    Tensor::new(shape, data).expect("row gather")
}

/// Minimises mean squared error of `net(x)` against `y` with shuffled minibatches.
pub fn train_regression(net: &mut Network, x: &Tensor, y: &Tensor, cfg: &TrainConfig) -> Result<LossTrace> {
    cfg.validate()?;
    let n = x.shape().first().copied().unwrap_or(0);
    if n == 0 {
        return Err(Error::data("empty training set"));
    }
    if y.shape().first() != Some(&n) {
        return Err(Error::shape("train_regression", format!("inputs {:?} vs targets {:?}", x.shape(), y.shape())));
    }
    let rng = RngStream::new(cfg.seed);
    let mut shuffle_rng = rng.fork(0);
    let mut dropout_rng = rng.fork(1);
    let mut opt = OptimizerState::new(OptimizerConfig::new(cfg.optimizer, cfg.g_learning_rate));
    let mut trace = LossTrace::default();
    for epoch in 0..cfg.epochs {
        let mut loss_mean = Mean::default();
        for (b, idx) in epoch_batches(n, cfg.batch_size, &mut shuffle_rng).iter().enumerate() {
            let mut tape = Tape::new();
            let bound = net.bind(&mut tape, true);
            let xb = tape.constant(rows(x, idx));
            let yb = tape.constant(rows(y, idx));
            let pred = net.forward_on(&mut tape, &bound, xb, Mode::Train, &mut dropout_rng)?;
            let loss = mse(&mut tape, pred, yb)?;
            loss_mean.add(finite_loss(item(&tape, loss), "mse", epoch, b)?);
            let grads = tape.backward(loss)?;
            let g = bound.grads(&grads, net)?;
            opt.step(&mut net.params, &g, Direction::Descend)?;
        }
        trace.push(EpochRecord { epoch, phase: Phase::Supervised, g_loss: loss_mean.get(), d_loss: None, value: None })?;
    }
    Ok(trace)
}

/// Fits a forecaster's head to the first `head` targets of each training window.
pub fn train_forecaster(net: &mut Network, train: &WindowDataset, cfg: &TrainConfig) -> Result<LossTrace> {
    if train.is_empty() {
        return Err(Error::data("empty training set"));
    }
    let head = match net.output_shape()? {
        FlowShape::Flat { dim } => dim,
        s => return Err(Error::invalid(format!("forecaster must end in a flat head, got {s:?}"))),
    };
    let idx: Vec<usize> = (0..train.len()).collect();
    let x = train.input_tensor(&idx);
    let y = train.target_tensor(&idx, head)?;
    train_regression(net, &x, &y, cfg)
}
