use crate::error::{Error, Result};

fn check(y: &[f64], yhat: &[f64], op: &str) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::shape(op, format!("{} actuals vs {} predictions", y.len(), yhat.len())));
    }
    if y.is_empty() {
        return Err(Error::invalid(format!("{op} needs at least one pair")));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, "rmse")?;
    let s: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((s / y.len() as f64).sqrt())
}

/// Mean absolute percentage error as a fraction.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, "mape")?;
    let mut s = 0.0;
    for (i, (a, b)) in y.iter().zip(yhat).enumerate() {
        if *a == 0.0 {
            return Err(Error::domain("mape", format!("actual value at index {i} is zero")));
        }
        s += ((a - b) / a).abs();
    }
    Ok(s / y.len() as f64)
}

/// `sum(w_i m_i) / sum(w_i)`.
pub fn weighted_average(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::shape("weighted_average", format!("{} values vs {} weights", values.len(), weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights sum to zero"));
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let (y, p) = ([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]);
        assert!((rmse(&y, &p).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((mape(&y, &p).unwrap() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn zero_actual_named() {
        let e = mape(&[1.0, 0.0], &[1.0, 1.0]).unwrap_err().to_string();
        assert!(e.contains("index 1"), "{e}");
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_weight_returns_value() {
        assert_eq!(weighted_average(&[0.3], &[2.0]).unwrap(), 0.3);
    }
}
