use serde::{Deserialize, Serialize};

use super::network::Network;
use super::spec::{Activation, LayerSpec, NetSpec};
use crate::error::{Error, Result};
use crate::numcore::RngStream;

pub const GENERATOR_RECURRENT_WIDTHS: [usize; 3] = [1024, 512, 256];
pub const GENERATOR_DENSE_WIDTHS: [usize; 2] = [128, 64];
pub const GENERATOR_DROPOUT: f64 = 0.4;
pub const DISCRIMINATOR_FILTERS: [usize; 3] = [32, 64, 128];
pub const DISCRIMINATOR_DENSE_WIDTHS: [usize; 2] = [220, 330];
pub const DEFAULT_KERNEL: usize = 5;
pub const DEFAULT_STRIDE: usize = 4;
pub const TIMEGAN_HIDDEN: usize = 24;
pub const TIMEGAN_LAYERS: usize = 3;

/// Scales a reference width, never below one unit.
pub fn scaled(width: usize, multiplier: f64) -> usize {
    ((width as f64 * multiplier).round() as usize).max(1)
}

/// Recurrent cell family for forecasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl std::str::FromStr for CellKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(Error::invalid(format!("unknown cell kind {other:?} (expected gru or lstm)"))),
        }
    }
}

/// Conditional generator: a window of conditioning features concatenated with
/// per-step noise, mapped to `horizon` values in `(0, 1)`.
pub fn generator_spec(seq_len: usize, cond_features: usize, latent_dim: usize, horizon: usize, multiplier: f64) -> Result<NetSpec> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::invalid(format!("width multiplier must be positive, got {multiplier}")));
    }
    let mut layers: Vec<LayerSpec> = GENERATOR_RECURRENT_WIDTHS
        .iter()
        .map(|&w| LayerSpec::Gru { units: scaled(w, multiplier) })
        .collect();
    layers.push(LayerSpec::LastStep);
    layers.push(LayerSpec::dense(scaled(GENERATOR_DENSE_WIDTHS[0], multiplier), Activation::Relu));
    layers.push(LayerSpec::Dropout { rate: GENERATOR_DROPOUT });
    layers.push(LayerSpec::dense(scaled(GENERATOR_DENSE_WIDTHS[1], multiplier), Activation::Relu));
    layers.push(LayerSpec::dense(horizon, Activation::Sigmoid));
    let spec = NetSpec { name: "generator".into(), seq_len: Some(seq_len), input_features: cond_features + latent_dim, layers };
    spec.plan()?;
    Ok(spec)
}

/// Output head of a discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Probability of "real".
    Sigmoid,
    /// Unbounded critic score.
    Linear,
}

/// Shortest input three stacked convolutions accept.
pub fn min_conv_length(kernel: usize, stride: usize) -> usize {
    let mut len = 1;
    for _ in 0..DISCRIMINATOR_FILTERS.len() {
        len = (len - 1) * stride + kernel;
    }
    len
}

/// Largest stride not above `max_stride` whose conv stack fits `len`.
pub fn fit_stride(len: usize, kernel: usize, max_stride: usize) -> Result<usize> {
    (1..=max_stride.max(1))
        .rev()
        .find(|&s| min_conv_length(kernel, s) <= len)
        .ok_or_else(|| {
            Error::invalid(format!(
                "sequence of length {len} too short for three convolutions with kernel {kernel} (needs {})",
                min_conv_length(kernel, 1)
            ))
        })
}

pub fn discriminator_spec(len: usize, channels: usize, kernel: usize, stride: usize, head: Head, multiplier: f64) -> Result<NetSpec> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::invalid(format!("width multiplier must be positive, got {multiplier}")));
    }
    let need = min_conv_length(kernel.max(1), stride.max(1));
    if len < need {
        return Err(Error::invalid(format!(
            "discriminator input length {len} shorter than {need} required by kernel {kernel}, stride {stride}"
        )));
    }
    let mut layers: Vec<LayerSpec> = DISCRIMINATOR_FILTERS
        .iter()
        .map(|&f| LayerSpec::Conv1d { filters: scaled(f, multiplier), kernel, stride, activation: Activation::Relu })
        .collect();
    layers.push(LayerSpec::Flatten);
    for &w in &DISCRIMINATOR_DENSE_WIDTHS {
        layers.push(LayerSpec::dense(scaled(w, multiplier), Activation::Relu));
    }
    let act = match head {
        Head::Sigmoid => Activation::Sigmoid,
        Head::Linear => Activation::Linear,
    };
    layers.push(LayerSpec::dense(1, act));
    let name = match head {
        Head::Sigmoid => "discriminator",
        Head::Linear => "critic",
    };
    let spec = NetSpec { name: name.into(), seq_len: Some(len), input_features: channels, layers };
    spec.plan()?;
    Ok(spec)
}

/// Stacked recurrent forecaster with a linear `horizon`-wide head.
pub fn forecaster_spec(kind: CellKind, layers: usize, units: usize, seq_len: usize, features: usize, horizon: usize) -> Result<NetSpec> {
    if layers == 0 || units == 0 || horizon == 0 {
        return Err(Error::invalid("forecaster needs at least one layer, one unit and horizon >= 1"));
    }
    let mut ls: Vec<LayerSpec> = (0..layers)
        .map(|_| match kind {
            CellKind::Gru => LayerSpec::Gru { units },
            CellKind::Lstm => LayerSpec::Lstm { units },
        })
        .collect();
    ls.push(LayerSpec::LastStep);
    ls.push(LayerSpec::dense(horizon, Activation::Linear));
    let name = match kind {
        CellKind::Gru => "gru_forecaster",
        CellKind::Lstm => "lstm_forecaster",
    };
    let spec = NetSpec { name: name.into(), seq_len: Some(seq_len), input_features: features, layers: ls };
    spec.plan()?;
    Ok(spec)
}

fn gru_stack(name: &str, seq_len: usize, input: usize, hidden: usize, layers: usize, out: usize, act: Activation) -> NetSpec {
    let mut ls: Vec<LayerSpec> = (0..layers).map(|_| LayerSpec::Gru { units: hidden }).collect();
    ls.push(LayerSpec::dense(out, act));
    NetSpec { name: name.into(), seq_len: Some(seq_len), input_features: input, layers: ls }
}

/// The five sub-networks of the latent-space sequence GAN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGanNets {
    pub embedder: Network,
    pub recovery: Network,
    pub generator: Network,
    pub supervisor: Network,
    pub discriminator: Network,
}

impl TimeGanNets {
    pub fn roles(&self) -> [(&'static str, &Network); 5] {
        [
            ("embedder", &self.embedder),
            ("recovery", &self.recovery),
            ("generator", &self.generator),
            ("supervisor", &self.supervisor),
            ("discriminator", &self.discriminator),
        ]
    }

    pub fn hidden_dim(&self) -> usize {
        match self.embedder.spec.layers.last() {
            Some(LayerSpec::Dense { units, .. }) => *units,
            _ => 0,
        }
    }
}

pub fn timegan_specs(seq_len: usize, features: usize, hidden: usize, layers: usize) -> Result<[NetSpec; 5]> {
    if hidden == 0 || layers == 0 {
        return Err(Error::invalid("hidden size and layer count must be positive"));
    }
    let specs = [
        gru_stack("embedder", seq_len, features, hidden, layers, hidden, Activation::Sigmoid),
        gru_stack("recovery", seq_len, hidden, hidden, layers, features, Activation::Sigmoid),
        gru_stack("generator", seq_len, features, hidden, layers, hidden, Activation::Sigmoid),
        gru_stack("supervisor", seq_len, hidden, hidden, layers, hidden, Activation::Sigmoid),
        gru_stack("discriminator", seq_len, hidden, hidden, layers, 1, Activation::Linear),
    ];
    for s in &specs {
        s.plan()?;
    }
    Ok(specs)
}

pub fn build_timegan(seq_len: usize, features: usize, hidden: usize, layers: usize, rng: &mut RngStream) -> Result<TimeGanNets> {
    let [e, r, g, s, d] = timegan_specs(seq_len, features, hidden, layers)?;
    Ok(TimeGanNets {
        embedder: Network::init(e, &mut rng.fork(0))?,
        recovery: Network::init(r, &mut rng.fork(1))?,
        generator: Network::init(g, &mut rng.fork(2))?,
        supervisor: Network::init(s, &mut rng.fork(3))?,
        discriminator: Network::init(d, &mut rng.fork(4))?,
    })
}
