//! Seeded synthetic OHLCV fixtures standing in for a real index feed.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::ohlcv::{OhlcvRecord, PriceSeries, Provenance};
use crate::error::{Error, Result};
use crate::numcore::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Geometric random walk with one sharp downward jump and a high-volatility regime after it.
    Jump,
    /// Sinusoid plus Gaussian noise.
    Sine,
    /// Mean-reverting AR(1) around a fixed level.
    Ar1,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jump" => Ok(SynthKind::Jump),
            "sine" => Ok(SynthKind::Sine),
            "ar1" => Ok(SynthKind::Ar1),
            other => Err(Error::Config(format!("unknown synthetic kind {other} (expected jump, sine, ar1)"))),
        }
    }
}

pub const AR1_COEFFICIENT: f64 = 0.8;
pub const AR1_LEVEL: f64 = 100.0;
pub const AR1_NOISE: f64 = 2.0;
pub const SINE_PERIOD: f64 = 64.0;

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn closes(kind: SynthKind, rows: usize, rng: &mut RngStream) -> Vec<f64> {
    match kind {
        SynthKind::Jump => {
            let jump_at = rows * 3 / 5;
            let mut price: f64 = 6000.0;
            (0..rows)
                .map(|t| {
                    let stressed = t >= jump_at && t < jump_at + 40;
                    let vol = if stressed { 0.03 } else { 0.012 };
                    price *= (0.0003 + vol * rng.normal()).exp();
                    if t == jump_at {
                        price *= 0.65;
                    }
                    price
                })
                .collect()
        }
        SynthKind::Sine => (0..rows)
            .map(|t| 100.0 + 20.0 * (std::f64::consts::TAU * t as f64 / SINE_PERIOD).sin() + 2.0 * rng.normal())
            .collect(),
        SynthKind::Ar1 => {
            let mut x = 0.0;
            (0..rows)
                .map(|_| {
                    x = AR1_COEFFICIENT * x + AR1_NOISE * rng.normal();
                    AR1_LEVEL + x
                })
                .collect()
        }
    }
}

/// `rows` consecutive business days starting 2010-01-04.
pub fn synth_series(kind: SynthKind, rows: usize, seed: u64) -> Result<PriceSeries> {
    if rows < 2 {
        return Err(Error::invalid("synthetic series needs at least 2 rows"));
    }
    let mut rng = RngStream::new(seed);
    let close = closes(kind, rows, &mut rng);
    let dates = business_days(NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"), rows);
    let mut records = Vec::with_capacity(rows);
    for t in 0..rows {
        let prev = if t == 0 { close[0] } else { close[t - 1] };
        let open = prev * (1.0 + 0.002 * rng.normal());
        let high = open.max(close[t]) * (1.0 + 0.003 * rng.normal().abs());
        let low = open.min(close[t]) * (1.0 - 0.003 * rng.normal().abs());
        let volume = (1.0e6 * (0.3 * rng.normal()).exp()).round();
        records.push(OhlcvRecord { date: dates[t], open, high, low, close: close[t], adj_close: close[t], volume });
    }
    Ok(PriceSeries { records, provenance: Provenance::Raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_seeded_and_valid() {
        for kind in [SynthKind::Jump, SynthKind::Sine, SynthKind::Ar1] {
            let a = synth_series(kind, 300, 3).unwrap();
            assert_eq!(a, synth_series(kind, 300, 3).unwrap());
            assert_ne!(a, synth_series(kind, 300, 4).unwrap());
            assert!(a.records.iter().all(|r| r.validate().is_ok()));
            assert!(a.records.windows(2).all(|w| w[0].date < w[1].date));
        }
    }

    #[test]
    fn jump_fixture_has_a_crash() {
        let s = synth_series(SynthKind::Jump, 1000, 1).unwrap();
        let c = s.column(3);
        let worst = c.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
        assert!(worst < 0.75, "largest one-day drop ratio {worst}");
    }
}
