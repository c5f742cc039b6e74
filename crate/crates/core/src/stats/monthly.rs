use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::data::{PriceSeries, RAW_FIELDS};
use crate::error::{Error, Result};

/// The price columns (everything but volume).
const PRICE_FIELDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRow {
    pub year: i32,
    pub month: u32,
    pub days: usize,
    pub mean: [f64; PRICE_FIELDS],
    pub max: [f64; PRICE_FIELDS],
    pub min: [f64; PRICE_FIELDS],
}

/// Calendar-month mean/max/min of each price column.
pub fn monthly_aggregate(series: &PriceSeries) -> Result<Vec<MonthlyRow>> {
    if series.is_empty() {
        return Err(Error::data("monthly aggregation of an empty series"));
    }
    let mut out: Vec<MonthlyRow> = Vec::new();
    let mut sums = [0.0; PRICE_FIELDS];
    for r in &series.records {
        let (y, m) = (r.date.year(), r.date.month());
        let v = r.values();
        let same = out.last().is_some_and(|row| row.year == y && row.month == m);
        if !same {
            if let Some(row) = out.last_mut() {
                row.mean = sums.map(|s| s / row.days as f64);
            }
            sums = [0.0; PRICE_FIELDS];
            out.push(MonthlyRow {
                year: y,
                month: m,
                days: 0,
                mean: [0.0; PRICE_FIELDS],
                max: [f64::NEG_INFINITY; PRICE_FIELDS],
                min: [f64::INFINITY; PRICE_FIELDS],
            });
        }
        let row = out.last_mut().expect("row pushed above");
        row.days += 1;
        for f in 0..PRICE_FIELDS {
            sums[f] += v[f];
            row.max[f] = row.max[f].max(v[f]);
            row.min[f] = row.min[f].min(v[f]);
        }
    }
    if let Some(row) = out.last_mut() {
        row.mean = sums.map(|s| s / row.days as f64);
    }
    Ok(out)
}

pub fn monthly_csv(rows: &[MonthlyRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["Month".to_string(), "Days".to_string()];
    for f in &RAW_FIELDS[..PRICE_FIELDS] {
        header.extend([format!("{f}_mean"), format!("{f}_max"), format!("{f}_min")]);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{:04}-{:02}", r.year, r.month), r.days.to_string()];
        for f in 0..PRICE_FIELDS {
            rec.extend([r.mean[f].to_string(), r.max[f].to_string(), r.min[f].to_string()]);
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::data(e.to_string()))
}
