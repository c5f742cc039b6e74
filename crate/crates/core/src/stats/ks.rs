use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Two-sample Kolmogorov–Smirnov statistic `sup |F1 - F2|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Kolmogorov survival function `Q(λ) = P(K > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-λ form converges fast where the alternating series does not
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..20).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value of a KS statistic for sample sizes `n` and `m`.
pub fn ks_p_value(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    /// Largest per-column KS statistic.
    pub statistic: f64,
    pub ks: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Bonferroni-adjusted p-values.
    pub adjusted_p_values: Vec<f64>,
    pub alpha: f64,
    /// True when the samples are judged to come from different distributions.
    pub reject: bool,
    pub method: String,
}

/// Column-wise KS tests with a Bonferroni correction.
///
/// Samples are given as rows of equal arity.
pub fn two_sample_test(real: &[Vec<f64>], synthetic: &[Vec<f64>], alpha: f64) -> Result<TwoSampleResult> {
    if real.is_empty() || synthetic.is_empty() {
        return Err(Error::invalid("two-sample test needs non-empty samples"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let k = real[0].len();
    if k == 0 || real.iter().chain(synthetic).any(|r| r.len() != k) {
        return Err(Error::shape("two_sample_test", format!("rows must all have arity {k}")));
    }
    let column = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    let mut ks = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let d = ks_statistic(&column(real, j), &column(synthetic, j));
        ks.push(d);
        p_values.push(ks_p_value(d, real.len(), synthetic.len()));
    }
    let adjusted: Vec<f64> = p_values.iter().map(|p| (p * k as f64).min(1.0)).collect();
    Ok(TwoSampleResult {
        statistic: ks.iter().cloned().fold(0.0, f64::max),
        reject: adjusted.iter().any(|&p| p < alpha),
        ks,
        p_values,
        adjusted_p_values: adjusted,
        alpha,
        method: "per-column two-sample Kolmogorov-Smirnov, asymptotic p-values, Bonferroni".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn sample_against_itself_accepts() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.7).sin()).collect();
        let r = two_sample_test(&rows(&x), &rows(&x), 0.05).unwrap();
        assert_eq!(r.ks, vec![0.0]);
        assert!(!r.reject);
    }

    #[test]
    fn disjoint_supports_reject() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        let r = two_sample_test(&rows(&a), &rows(&b), 0.05).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.reject);
    }

    #[test]
    fn arity_mismatch_rejected() {
        assert!(two_sample_test(&[vec![1.0, 2.0]], &[vec![1.0]], 0.05).is_err());
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Q(1.36) ≈ 0.049, the classical 5% critical value
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        // the two series forms agree where they meet
        let lo = kolmogorov_q(1.1799999);
        let hi = kolmogorov_q(1.18);
        assert!((lo - hi).abs() < 1e-6);
    }

    #[test]
    fn ties_are_handled() {
        assert_eq!(ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 1.0, 2.0]), 0.0);
        assert!((ks_statistic(&[1.0, 1.0], &[1.0, 2.0]) - 0.5).abs() < 1e-15);
    }
}
