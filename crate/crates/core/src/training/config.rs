use serde::{Deserialize, Serialize};

use super::objectives::LossMode;
use crate::error::{Error, Result};
use crate::numcore::OptimizerKind;

/// Hyper-parameters shared by all training procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    /// Generator (and forecaster) learning rate.
    pub g_learning_rate: f64,
    /// Discriminator learning rate.
    pub d_learning_rate: f64,
    pub loss_mode: LossMode,
    /// Per-step noise channels fed to the generator next to the history.
    pub latent_dim: usize,
    pub width_multiplier: f64,
    pub disc_width_multiplier: f64,
    pub kernel: usize,
    /// Upper bound on the convolution stride; lowered when the input is short.
    pub max_stride: usize,
    pub n_critic: usize,
    pub clip: f64,
    pub wgan_learning_rate: f64,
    pub forecaster_layers: usize,
    pub forecaster_units: usize,
    pub timegan_hidden: usize,
    pub timegan_layers: usize,
    pub timegan_lambda: f64,
    pub timegan_eta: f64,
    /// Fractions of `epochs` spent in the three phases.
    pub timegan_phase_split: [f64; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            epochs: 250,
            batch_size: 128,
            optimizer: OptimizerKind::Adam,
            g_learning_rate: 1e-5,
            d_learning_rate: 1e-5,
            loss_mode: LossMode::Nonsaturating,
            latent_dim: 4,
            width_multiplier: 1.0,
            disc_width_multiplier: 1.0,
            kernel: 5,
            max_stride: 4,
            n_critic: 5,
            clip: 0.01,
            wgan_learning_rate: 5e-5,
            forecaster_layers: 6,
            forecaster_units: 64,
            timegan_hidden: 24,
            timegan_layers: 3,
            timegan_lambda: 1.0,
            timegan_eta: 10.0,
            timegan_phase_split: [0.4, 0.4, 0.2],
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("n_critic", self.n_critic),
            ("kernel", self.kernel),
            ("max_stride", self.max_stride),
            ("forecaster_layers", self.forecaster_layers),
            ("forecaster_units", self.forecaster_units),
            ("timegan_hidden", self.timegan_hidden),
            ("timegan_layers", self.timegan_layers),
            ("latent_dim", self.latent_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("g_learning_rate", self.g_learning_rate),
            ("d_learning_rate", self.d_learning_rate),
            ("wgan_learning_rate", self.wgan_learning_rate),
            ("clip", self.clip),
            ("width_multiplier", self.width_multiplier),
            ("disc_width_multiplier", self.disc_width_multiplier),
        ] {
            positive(name, v)?;
        }
        for (name, v) in [("timegan_lambda", self.timegan_lambda), ("timegan_eta", self.timegan_eta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        let s = self.timegan_phase_split;
        if s.iter().any(|&f| !(f >= 0.0)) || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("timegan_phase_split must be non-negative and sum to 1, got {s:?}")));
        }
        Ok(())
    }

    /// Epochs per TimeGAN phase; the third phase takes the rounding remainder.
    pub fn timegan_phase_epochs(&self) -> [usize; 3] {
        let e = self.epochs as f64;
        let p1 = (e * self.timegan_phase_split[0]).round() as usize;
        let p2 = ((e * self.timegan_phase_split[1]).round() as usize).min(self.epochs - p1.min(self.epochs));
        let p1 = p1.min(self.epochs);
        [p1, p2, self.epochs - p1 - p2]
    }
}

/// Named configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PaperGan,
    PaperWgan,
    PaperGru,
    PaperLstm,
    PaperTimegan,
    /// Small widths and short budgets for a single workstation.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-gan" => Ok(Preset::PaperGan),
            "paper-wgan" => Ok(Preset::PaperWgan),
            "paper-gru" => Ok(Preset::PaperGru),
            "paper-lstm" => Ok(Preset::PaperLstm),
            "paper-timegan" => Ok(Preset::PaperTimegan),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected paper-gan, paper-wgan, paper-gru, paper-lstm, paper-timegan or desk)"
            ))),
        }
    }
}

impl Preset {
    pub fn config(self) -> TrainConfig {
        let base = TrainConfig::default();
        match self {
            Preset::PaperGan | Preset::PaperTimegan => base,
            Preset::PaperWgan => TrainConfig { optimizer: OptimizerKind::RmsProp, ..base },
            Preset::PaperGru => TrainConfig { epochs: 50, ..base },
            Preset::PaperLstm => TrainConfig { epochs: 150, ..base },
            Preset::Desk => TrainConfig {
                epochs: 30,
                batch_size: 64,
                g_learning_rate: 1e-3,
                d_learning_rate: 1e-3,
                wgan_learning_rate: 1e-3,
                clip: 0.3,
                width_multiplier: 1.0 / 32.0,
                disc_width_multiplier: 1.0 / 8.0,
                forecaster_layers: 1,
                forecaster_units: 32,
                timegan_hidden: 12,
                timegan_layers: 1,
                ..base
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_gan_preset_values() {
        let c = Preset::PaperGan.config();
        assert_eq!((c.g_learning_rate, c.d_learning_rate, c.batch_size, c.epochs), (1e-5, 1e-5, 128, 250));
        assert_eq!(c.optimizer, OptimizerKind::Adam);
    }

    #[test]
    fn typo_key_rejected_by_name() {
        let e = serde_json::from_str::<TrainConfig>(r#"{"learning_rte": 0.1}"#).unwrap_err().to_string();
        assert!(e.contains("learning_rte"), "{e}");
    }

    #[test]
    fn phase_split_sums_to_budget() {
        for epochs in 1..40 {
            let c = TrainConfig { epochs, ..Default::default() };
            assert_eq!(c.timegan_phase_epochs().iter().sum::<usize>(), epochs);
        }
        let c = TrainConfig { epochs: 100, ..Default::default() };
        assert_eq!(c.timegan_phase_epochs(), [40, 40, 20]);
    }

    #[test]
    fn zero_batch_rejected() {
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
    }
}
