use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Ordered, named parameter tensors of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NetworkParams {
    entries: Vec<(String, Tensor)>,
}

impl NetworkParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(Error::invalid(format!("duplicate parameter name {name}")));
        }
        self.entries.push((name, value));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, (_, t)| m.max(t.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }
}

/// Gradients keyed by parameter name.
pub type ParamGrads = NetworkParams;

/// Projects every parameter entry into `[-c, c]`.
pub fn clip_weights(params: &mut NetworkParams, c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("clip bound must be positive and finite, got {c}")));
    }
    for (_, t) in params.iter_mut() {
        for w in t.data_mut() {
            *w = w.clamp(-c, c);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(values: Vec<f64>) -> NetworkParams {
        let mut p = NetworkParams::new();
        p.insert("w", Tensor::vector(values)).unwrap();
        p
    }

    #[test]
    fn clip_saturates_out_of_range_entries() {
        let mut p = one(vec![-0.2, 0.0, 0.3]);
        clip_weights(&mut p, 0.01).unwrap();
        assert_eq!(p.get("w").unwrap().data(), &[-0.01, 0.0, 0.01]);
    }

    #[test]
    fn clip_keeps_in_range_entries() {
        let v = vec![-0.004, 0.001, 0.0099];
        let mut p = one(v.clone());
        clip_weights(&mut p, 0.01).unwrap();
        assert_eq!(p.get("w").unwrap().data(), v.as_slice());
    }

    #[test]
    fn clip_rejects_non_positive_bound() {
        let mut p = one(vec![1.0]);
        assert!(clip_weights(&mut p, 0.0).is_err());
        assert!(clip_weights(&mut p, -1.0).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut p = one(vec![1.0]);
        assert!(p.insert("w", Tensor::scalar(1.0)).is_err());
    }
}
