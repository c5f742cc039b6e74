use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{RngStream, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Supervised,
    Adversarial,
    Critic,
    Discriminator,
    /// TimeGAN autoencoder.
    Reconstruction,
    /// TimeGAN one-step latent prediction.
    Supervisor,
    /// TimeGAN joint stage.
    Joint,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Supervised => "supervised",
            Phase::Adversarial => "adversarial",
            Phase::Critic => "critic",
            Phase::Discriminator => "discriminator",
            Phase::Reconstruction => "reconstruction",
            Phase::Supervisor => "supervisor",
            Phase::Joint => "joint",
        }
    }
}

/// One completed epoch. Values not produced by the phase are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    /// Generator, forecaster or autoencoder loss.
    pub g_loss: Option<f64>,
    pub d_loss: Option<f64>,
    /// Value function (GAN) or critic estimate (WGAN).
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub records: Vec<EpochRecord>,
}

impl LossTrace {
    pub fn push(&mut self, rec: EpochRecord) -> Result<()> {
        for (name, v) in [("g_loss", rec.g_loss), ("d_loss", rec.d_loss), ("V", rec.value)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("{name} = {v} at epoch {} ({})", rec.epoch, rec.phase.as_str())));
                }
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn extend(&mut self, other: LossTrace) {
        self.records.extend(other.records);
    }

    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut s = String::from("epoch,g_loss,d_loss,V,phase\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{},{}\n", r.epoch, f(r.g_loss), f(r.d_loss), f(r.value), r.phase.as_str()));
        }
        s
    }
}

/// Running mean over the batches of one epoch.
#[derive(Default)]
pub(crate) struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    pub fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    pub fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Shuffled minibatches covering `0..n` once.
pub(crate) fn epoch_batches(n: usize, m: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    idx.chunks(m.max(1)).map(|c| c.to_vec()).collect()
}

pub(crate) fn finite_loss(v: f64, what: &str, epoch: usize, batch: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} = {v} at epoch {epoch}, batch {batch}")))
    }
}

pub(crate) fn mse(tape: &mut Tape, pred: Var, target: Var) -> Result<Var> {
    let d = tape.sub(pred, target)?;
    let sq = tape.mul(d, d)?;
    tape.mean(sq)
}

/// `mean log(clamp(p))` or `mean log(1 - clamp(p))`.
pub(crate) fn mean_log_prob(tape: &mut Tape, p: Var, complement: bool) -> Result<Var> {
    use super::objectives::PROB_EPS;
    let c = tape.clamp(p, PROB_EPS, 1.0 - PROB_EPS)?;
    let c = if complement { tape.one_minus(c)? } else { c };
    let l = tape.log(c)?;
    tape.mean(l)
}

pub(crate) fn item(tape: &Tape, v: Var) -> f64 {
    tape.value(v).data()[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_missing_values_empty() {
        let mut t = LossTrace::default();
        t.push(EpochRecord { epoch: 0, phase: Phase::Reconstruction, g_loss: Some(0.5), d_loss: None, value: None })
            .unwrap();
        assert_eq!(t.to_csv(), "epoch,g_loss,d_loss,V,phase\n0,5e-1,,,reconstruction\n");
    }

    #[test]
    fn non_finite_record_rejected() {
        let mut t = LossTrace::default();
        let r = EpochRecord { epoch: 3, phase: Phase::Adversarial, g_loss: Some(f64::NAN), d_loss: None, value: None };
        assert!(matches!(t.push(r), Err(Error::NonFinite(_))));
    }

    #[test]
    fn batches_partition_indices() {
        let mut rng = RngStream::new(2);
        let b = epoch_batches(10, 3, &mut rng);
        assert_eq!(b.len(), 4);
        let mut all: Vec<usize> = b.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }
}
