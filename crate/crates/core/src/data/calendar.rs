use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::ohlcv::{OhlcvRecord, PriceSeries, Provenance, RepairSummary};
use crate::error::{Error, Result};

/// Longest run of consecutive missing business days that may be imputed.
pub const MAX_IMPUTABLE_GAP: usize = 10;

pub fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn next_business_day(d: NaiveDate) -> NaiveDate {
    let mut n = d + Duration::days(1);
    while is_weekend(n) {
        n += Duration::days(1);
    }
    n
}

/// Averages each field over the `k` observed rows nearest to `target` by
/// calendar distance. Rows tied with the k-th distance are all included.
fn knn_average(observed: &[OhlcvRecord], target: NaiveDate, k: usize) -> [f64; 6] {
    let pos = observed.partition_point(|r| r.date < target);
    let mut cand: Vec<(i64, usize)> = Vec::with_capacity(2 * k);
    for i in (pos.saturating_sub(k)..pos).rev() {
        cand.push(((target - observed[i].date).num_days(), i));
    }
    for (i, r) in observed.iter().enumerate().skip(pos).take(k) {
        cand.push(((r.date - target).num_days(), i));
    }
    cand.sort();
    let cutoff = cand[(k - 1).min(cand.len() - 1)].0;
    let chosen: Vec<usize> = cand.iter().filter(|(d, _)| *d <= cutoff).map(|(_, i)| *i).collect();
    let mut sum = [0.0; 6];
    for &i in &chosen {
        for (s, v) in sum.iter_mut().zip(observed[i].values()) {
            *s += v;
        }
    }
    sum.map(|s| s / chosen.len() as f64)
}

/// Removes weekend rows and fills missing business days.
///
/// A missing Monday whose Friday was observed takes the Friday values. Every
/// other missing business day takes the per-field mean of its `knn_k`
/// nearest observed rows. Runs of more than [`MAX_IMPUTABLE_GAP`] missing
/// business days are rejected. A series that is already repaired is
/// returned unchanged.
pub fn repair_calendar(series: &PriceSeries, knn_k: usize) -> Result<PriceSeries> {
    if knn_k == 0 {
        return Err(Error::invalid("knn_k must be positive"));
    }
    if series.is_empty() {
        return Err(Error::data("cannot repair an empty series"));
    }
    if series.is_repaired() {
        return Ok(series.clone());
    }
    let mut summary = RepairSummary::default();
    let observed: Vec<OhlcvRecord> = series
        .records
        .iter()
        .filter(|r| {
            let weekend = is_weekend(r.date);
            summary.weekend_rows_dropped += weekend as usize;
            !weekend
        })
        .copied()
        .collect();
    if observed.is_empty() {
        return Err(Error::data("series contains only weekend rows"));
    }

    let mut out = Vec::with_capacity(observed.len());
    out.push(observed[0]);
    for pair in observed.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        let mut missing = Vec::new();
        let mut d = next_business_day(prev.date);
        while d < next.date {
            missing.push(d);
            d = next_business_day(d);
        }
        if missing.len() > MAX_IMPUTABLE_GAP {
            return Err(Error::data(format!(
                "gap of {} business days between {} and {} is too large to impute (limit {})",
                missing.len(),
                prev.date,
                next.date,
                MAX_IMPUTABLE_GAP
            )));
        }
        for day in missing {
            let friday = day - Duration::days(3);
            let rec = if day.weekday() == Weekday::Mon && friday == prev.date {
                summary.mondays_filled += 1;
                OhlcvRecord { date: day, ..prev }
            } else {
                summary.knn_imputed += 1;
                OhlcvRecord::from_values(day, knn_average(&observed, day, knn_k))
            };
            out.push(rec);
        }
        out.push(next);
    }
    Ok(PriceSeries { records: out, provenance: Provenance::Repaired(summary) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(date: &str, close: f64) -> OhlcvRecord {
        let d = NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap();
        OhlcvRecord { date: d, open: close, high: close + 1.0, low: close - 1.0, close, adj_close: close, volume: 10.0 }
    }

    fn raw(records: Vec<OhlcvRecord>) -> PriceSeries {
        PriceSeries { records, provenance: Provenance::Raw }
    }

    #[test]
    fn gap_free_series_unchanged() {
        // Mon 2020-01-06 .. Fri 2020-01-10
        let recs: Vec<_> = (6..=10).map(|d| rec(&format!("2020-01-{d:02}"), d as f64)).collect();
        let r = repair_calendar(&raw(recs.clone()), 5).unwrap();
        assert_eq!(r.records, recs);
        assert_eq!(r.provenance, Provenance::Repaired(RepairSummary::default()));
    }

    #[test]
    fn missing_monday_copies_friday() {
        let s = raw(vec![rec("2020-01-03", 100.0), rec("2020-01-07", 105.0)]);
        let r = repair_calendar(&s, 5).unwrap();
        assert_eq!(r.len(), 3);
        let monday = r.records[1];
        assert_eq!(monday.date, NaiveDate::from_ymd_opt(2020, 1, 6).unwrap());
        assert_eq!(monday.values(), s.records[0].values());
    }

    #[test]
    fn missing_wednesday_knn_average() {
        let s = raw(vec![rec("2020-01-07", 100.0), rec("2020-01-09", 104.0)]);
        let r = repair_calendar(&s, 2).unwrap();
        assert_eq!(r.records[1].close, 102.0);
        // k = 1 still takes both equidistant neighbours
        let r1 = repair_calendar(&s, 1).unwrap();
        assert_eq!(r1.records[1].close, 102.0);
    }

    #[test]
    fn weekends_dropped() {
        let s = raw(vec![rec("2020-01-03", 1.0), rec("2020-01-04", 2.0), rec("2020-01-06", 3.0)]);
        let r = repair_calendar(&s, 5).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.records.iter().all(|x| !is_weekend(x.date)));
        assert_eq!(r.provenance, Provenance::Repaired(RepairSummary { weekend_rows_dropped: 1, ..Default::default() }));
    }

    #[test]
    fn long_gap_rejected() {
        let s = raw(vec![rec("2020-01-06", 1.0), rec("2020-01-24", 2.0)]);
        assert!(repair_calendar(&s, 5).unwrap_err().to_string().contains("too large"));
        assert!(repair_calendar(&raw(vec![]), 5).is_err());
    }

    #[test]
    fn repair_is_idempotent() {
        let s = raw(vec![rec("2020-01-03", 100.0), rec("2020-01-08", 104.0), rec("2020-01-11", 9.0)]);
        let once = repair_calendar(&s, 3).unwrap();
        assert_eq!(repair_calendar(&once, 3).unwrap(), once);
    }
}
