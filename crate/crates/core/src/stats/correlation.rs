use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Symmetric Pearson correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Row-major `n * n`.
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn by_name(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.get(i, j))
    }

    /// Validates symmetry, unit diagonal and range.
    pub fn from_values(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = names.len();
        if values.len() != n * n {
            return Err(Error::shape("correlation", format!("{} values for {n} names", values.len())));
        }
        let m = CorrelationMatrix { names, values };
        for i in 0..n {
            if m.get(i, i) != 1.0 {
                return Err(Error::invalid(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = m.get(i, j);
                if v != m.get(j, i) || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("entry ({i}, {j}) = {v} breaks symmetry or range")));
                }
            }
        }
        Ok(m)
    }

    /// CSV with a leading name column; values printed with `decimals` places when given.
    pub fn to_csv(&self, decimals: Option<usize>) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut row = vec![self.names[i].clone()];
            row.extend((0..self.n()).map(|j| match decimals {
                Some(d) => format!("{:.*}", d, self.get(i, j)),
                None => self.get(i, j).to_string(),
            }));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::data(e.to_string()))
    }
}

/// Pearson coefficient of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlations between named columns (upper triangle computed, then mirrored).
pub fn correlation_matrix(features: &FeatureMatrix, columns: &[String]) -> Result<CorrelationMatrix> {
    if features.n_rows() < 2 {
        return Err(Error::invalid("correlation needs at least 2 rows"));
    }
    let cols: Vec<Vec<f64>> = columns.iter().map(|c| features.column(c)).collect::<Result<_>>()?;
    correlation_of_columns(columns.to_vec(), &cols)
}

pub fn correlation_of_columns(names: Vec<String>, cols: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    let n = cols.len();
    for (name, c) in names.iter().zip(cols) {
        if c.iter().all(|v| *v == c[0]) {
            return Err(Error::data(format!("column {name} is constant; correlation undefined")));
        }
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let r = pearson(&cols[i], &cols[j]).expect("non-constant columns");
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    Ok(CorrelationMatrix { names, values })
}
