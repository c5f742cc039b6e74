use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub standard_error: f64,
    pub median: f64,
    pub standard_deviation: f64,
    /// Excess kurtosis (0 for a normal distribution).
    pub kurtosis: f64,
    pub skewness: f64,
    pub range: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub count: usize,
}

/// Row labels in report order.
pub const STAT_LABELS: [&str; 10] = [
    "Mean",
    "Standard Error",
    "Median",
    "Standard Deviation",
    "Kurtosis",
    "Skewness",
    "Range",
    "Minimum",
    "Maximum",
    "Count",
];

impl DescriptiveStats {
    pub fn as_row(&self) -> [f64; 10] {
        [
            self.mean,
            self.standard_error,
            self.median,
            self.standard_deviation,
            self.kurtosis,
            self.skewness,
            self.range,
            self.minimum,
            self.maximum,
            self.count as f64,
        ]
    }
}

/// Summary statistics of a sample.
///
/// The standard deviation uses the `n - 1` denominator. Skewness and
/// kurtosis are the standardized central moments `m3 / m2^1.5` and
/// `m4 / m2^2 - 3` with `1/n` moments.
pub fn describe(values: &[f64]) -> Result<DescriptiveStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid(format!("describe needs at least 2 values, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("describe input".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if m2 == 0.0 {
        return Err(Error::domain(
            "describe",
            "zero variance (standard deviation 0): skewness and kurtosis are undefined",
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let (minimum, maximum) = (sorted[0], sorted[n - 1]);
    Ok(DescriptiveStats {
        mean,
        standard_error: sd / nf.sqrt(),
        median,
        standard_deviation: sd,
        kurtosis: m4 / (m2 * m2) - 3.0,
        skewness: m3 / m2.powf(1.5),
        range: maximum - minimum,
        minimum,
        maximum,
        count: n,
    })
}
