use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Generator objective variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Ascend `log D(G(z))`.
    #[default]
    Nonsaturating,
    /// Descend `log(1 - D(G(z)))`.
    Minimax,
    /// Generator cost is exactly the negated discriminator cost.
    ZeroSum,
}

impl std::str::FromStr for LossMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonsaturating" => Ok(LossMode::Nonsaturating),
            "minimax" => Ok(LossMode::Minimax),
            "zero_sum" => Ok(LossMode::ZeroSum),
            other => Err(Error::invalid(format!("unknown loss mode {other:?}"))),
        }
    }
}

fn mean_log(ps: &[f64], f: impl Fn(f64) -> f64) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::invalid("empty probability batch"));
    }
    Ok(ps.iter().map(|&p| f(clamp_prob(p)).ln()).sum::<f64>() / ps.len() as f64)
}

/// `V = mean log D(x) + mean log(1 - D(G(z)))`.
pub fn gan_value(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    Ok(mean_log(d_real, |p| p)? + mean_log(d_fake, |p| 1.0 - p)?)
}

/// `J_D = -V / 2`.
pub fn discriminator_cost(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    Ok(-0.5 * gan_value(d_real, d_fake)?)
}

/// The quantity the generator minimises under `mode`.
pub fn generator_cost(mode: LossMode, d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    match mode {
        LossMode::Minimax => mean_log(d_fake, |p| 1.0 - p),
        LossMode::Nonsaturating => Ok(-mean_log(d_fake, |p| p)?),
        LossMode::ZeroSum => Ok(-discriminator_cost(d_real, d_fake)?),
    }
}

/// `x -> p(x) / (p(x) + q(x))`.
pub fn optimal_discriminator<'a>(
    p_density: impl Fn(f64) -> f64 + 'a,
    q_density: impl Fn(f64) -> f64 + 'a,
) -> impl Fn(f64) -> Result<f64> + 'a {
    move |x| {
        let (p, q) = (p_density(x), q_density(x));
        if !(p >= 0.0 && q >= 0.0) || !p.is_finite() || !q.is_finite() {
            return Err(Error::domain("optimal_discriminator", format!("invalid densities p={p}, q={q} at x={x}")));
        }
        if p + q == 0.0 {
            return Err(Error::domain("optimal_discriminator", format!("both densities vanish at x={x}")));
        }
        Ok(p / (p + q))
    }
}

fn check_distribution(name: &str, d: &[f64]) -> Result<()> {
    if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain("jensen_shannon_divergence", format!("{name} has a negative or non-finite mass")));
    }
    let s: f64 = d.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::domain("jensen_shannon_divergence", format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// Jensen-Shannon divergence in nats.
pub fn jensen_shannon_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::shape("jensen_shannon_divergence", format!("supports of size {} and {}", p.len(), q.len())));
    }
    check_distribution("p", p)?;
    check_distribution("q", q)?;
    let mut js = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            js += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            js += 0.5 * b * (b / m).ln();
        }
    }
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn indifferent_discriminator() {
        let h = [0.5; 7];
        assert!((gan_value(&h, &h).unwrap() + 2.0 * LN_2).abs() < 1e-15);
        assert!((discriminator_cost(&h, &h).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_discrimination_approaches_zero() {
        let v = gan_value(&[1.0; 3], &[0.0; 3]).unwrap();
        assert!(v < 0.0 && v > -1e-6);
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(gan_value(&[], &[0.5]).is_err());
    }

    #[test]
    fn optimal_discriminator_cases() {
        let d = optimal_discriminator(|_| 0.3, |_| 0.3);
        assert_eq!(d(1.7).unwrap(), 0.5);
        let d = optimal_discriminator(|_| 0.2, |_| 0.0);
        assert_eq!(d(0.0).unwrap(), 1.0);
        let d = optimal_discriminator(|_| 0.0, |_| 0.0);
        assert!(d(0.0).is_err());
    }

    #[test]
    fn jsd_edges() {
        assert_eq!(jensen_shannon_divergence(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!((jensen_shannon_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - LN_2).abs() < 1e-12);
        assert!(jensen_shannon_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }
}
