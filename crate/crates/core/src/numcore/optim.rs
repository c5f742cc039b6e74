use serde::{Deserialize, Serialize};

use super::params::{NetworkParams, ParamGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    RmsProp,
}

/// Whether an update lowers (`Descend`) or raises (`Ascend`) the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Descend,
    Ascend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// RMSProp squared-gradient decay.
    pub decay: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        OptimizerConfig { kind, learning_rate, beta1: 0.9, beta2: 0.999, decay: 0.9, epsilon: 1e-8 }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::RmsProp, learning_rate)
    }
}

/// Moment accumulators and step counter for one parameter set.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    config: OptimizerConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig) -> Self {
        OptimizerState { config, step: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn ensure_slots(&mut self, params: &NetworkParams) -> Result<()> {
        if self.first.is_empty() {
            self.first = params.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
            self.second = self.first.clone();
            return Ok(());
        }
        let shapes_match = self.first.len() == params.len()
            && params.iter().zip(&self.first).all(|((_, t), m)| t.len() == m.len());
        if !shapes_match {
            return Err(Error::invalid("optimizer state does not match the parameter set it was created for"));
        }
        Ok(())
    }

    /// One update of every parameter. Gradients are validated before any
    /// parameter is touched.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &ParamGrads, direction: Direction) -> Result<()> {
        for (name, p) in params.iter() {
            let g = grads.get(name).ok_or_else(|| Error::invalid(format!("missing gradient for parameter {name}")))?;
            if g.shape() != p.shape() {
                return Err(Error::shape(
                    "optimizer_step",
                    format!("gradient {:?} vs parameter {name} {:?}", g.shape(), p.shape()),
                ));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of parameter {name}")));
            }
        }
        self.ensure_slots(params)?;
        self.step += 1;
        let c = self.config;
        let sign = match direction {
            Direction::Descend => -1.0,
            Direction::Ascend => 1.0,
        };
        let t = self.step as i32;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for (slot, (name, p)) in params.iter_mut().enumerate() {
            let g = grads.get(name).expect("validated above").data();
            let m = &mut self.first[slot];
            let v = &mut self.second[slot];
            for (i, w) in p.data_mut().iter_mut().enumerate() {
                let gi = g[i];
                let update = match c.kind {
                    OptimizerKind::Sgd => c.learning_rate * gi,
                    OptimizerKind::Adam => {
                        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
                        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
                        let mh = m[i] / bias1;
                        let vh = v[i] / bias2;
                        c.learning_rate * mh / (vh.sqrt() + c.epsilon)
                    }
                    OptimizerKind::RmsProp => {
                        v[i] = c.decay * v[i] + (1.0 - c.decay) * gi * gi;
                        c.learning_rate * gi / (v[i].sqrt() + c.epsilon)
                    }
                };
                *w += sign * update;
            }
        }
        Ok(())
    }
}
