use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six price/volume fields, in canonical column order.
pub const RAW_FIELDS: [&str; 6] = ["Open", "High", "Low", "Close", "Adj Close", "Volume"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcvRecord {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: f64,
}

impl OhlcvRecord {
    /// Values in [`RAW_FIELDS`] order.
    pub fn values(&self) -> [f64; 6] {
        [self.open, self.high, self.low, self.close, self.adj_close, self.volume]
    }

    pub fn from_values(date: NaiveDate, v: [f64; 6]) -> Self {
        OhlcvRecord { date, open: v[0], high: v[1], low: v[2], close: v[3], adj_close: v[4], volume: v[5] }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.values().iter().any(|x| !x.is_finite()) {
            return Err("non-finite value".into());
        }
        if self.volume < 0.0 {
            return Err(format!("negative volume {}", self.volume));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        Ok(())
    }
}

/// Counts describing what calendar repair did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepairSummary {
    pub weekend_rows_dropped: usize,
    pub mondays_filled: usize,
    pub knn_imputed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "state")]
pub enum Provenance {
    Raw,
    Repaired(RepairSummary),
}

/// Date-ordered OHLCV records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub records: Vec<OhlcvRecord>,
    pub provenance: Provenance,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_repaired(&self) -> bool {
        matches!(self.provenance, Provenance::Repaired(_))
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.records.iter().map(|r| r.date).collect()
    }

    /// One field across the series (index into [`RAW_FIELDS`]).
    pub fn column(&self, field: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.values()[field]).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["Date"];
        header.extend(RAW_FIELDS);
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.date.format("%Y-%m-%d").to_string()];
            row.extend(r.values().iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        finish_csv(w)
    }
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::data(e.to_string()))
}

fn normalize(h: &str) -> String {
    h.trim().to_ascii_lowercase().chars().filter(|c| !matches!(c, ' ' | '_' | '-')).collect()
}

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    ["%Y-%m-%d", "%Y/%m/%d"].iter().find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

/// Parses a Date/Open/High/Low/Close/Adj Close/Volume CSV.
///
/// Header names are matched case-insensitively in any order. Rows are sorted
/// by date after parsing; duplicate dates are rejected. Row numbers in
/// diagnostics are file line numbers (the header is line 1).
pub fn parse_ohlcv_csv(text: &str) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(normalize).collect();
    let wanted = ["date", "open", "high", "low", "close", "adjclose", "volume"];
    let display = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"];
    let mut index = [0usize; 7];
    for (k, w) in wanted.iter().enumerate() {
        index[k] = headers
            .iter()
            .position(|h| h == w)
            .ok_or_else(|| Error::data(format!("missing required column {}", display[k])))?;
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse { row: line, detail: e.to_string() })?;
        let cell = |k: usize| row.get(index[k]).unwrap_or("");
        let date = parse_date(cell(0))
            .ok_or_else(|| Error::Parse { row: line, detail: format!("unparseable date {:?}", cell(0)) })?;
        let mut v = [0.0; 6];
        for (f, slot) in v.iter_mut().enumerate() {
            let raw = cell(f + 1);
            *slot = raw.parse::<f64>().map_err(|_| Error::Parse {
                row: line,
                detail: format!("unparseable {} value {:?}", display[f + 1], raw),
            })?;
        }
        let rec = OhlcvRecord::from_values(date, v);
        rec.validate().map_err(|detail| Error::Parse { row: line, detail })?;
        records.push((line, rec));
    }
    records.sort_by_key(|(_, r)| r.date);
    for pair in records.windows(2) {
        if pair[0].1.date == pair[1].1.date {
            return Err(Error::Parse {
                row: pair[1].0.max(pair[0].0),
                detail: format!("duplicate date {}", pair[1].1.date),
            });
        }
    }
    Ok(PriceSeries { records: records.into_iter().map(|(_, r)| r).collect(), provenance: Provenance::Raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANON: &str = "Date,Open,High,Low,Close,Adj Close,Volume
2020-01-02,10,12,9,11,11,100
2020-01-03,11,13,10,12,12,150
2020-01-06,12,14,11,13,13,0
";

    #[test]
    fn parses_canonical_file() {
        let s = parse_ohlcv_csv(CANON).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.records[1].close, 12.0);
        assert_eq!(s.provenance, Provenance::Raw);
    }

    #[test]
    fn column_order_and_case_are_free() {
        let shuffled = "volume,CLOSE,date,adj_close,low,High,open
150,12,2020-01-03,12,10,13,11
100,11,2020-01-02,11,9,12,10
0,13,2020-01-06,13,11,14,12
";
        assert_eq!(parse_ohlcv_csv(shuffled).unwrap(), parse_ohlcv_csv(CANON).unwrap());
    }

    #[test]
    fn thousands_separators_rejected_with_row() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume
2020-01-02,10,12,9,11,11,100
2020-01-03,\"1,000.5\",1200,900,1000,1000,100
";
        match parse_ohlcv_csv(text).unwrap_err() {
            Error::Parse { row, detail } => {
                assert_eq!(row, 3);
                assert!(detail.contains("Open"), "{detail}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_column_named() {
        let e = parse_ohlcv_csv("Date,Open,High,Low,Close,Volume\n").unwrap_err();
        assert!(e.to_string().contains("Adj Close"));
    }

    #[test]
    fn duplicate_dates_rejected() {
        let text = format!("{CANON}2020-01-03,11,13,10,12,12,150\n");
        assert!(parse_ohlcv_csv(&text).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn csv_round_trip() {
        let s = parse_ohlcv_csv(CANON).unwrap();
        assert_eq!(parse_ohlcv_csv(&s.to_csv().unwrap()).unwrap(), s);
    }
}
