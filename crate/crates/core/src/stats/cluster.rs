use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

/// One agglomeration step. Ids below `labels.len()` are leaves; merge `i`
/// creates cluster id `labels.len() + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

impl ClusterTree {
    /// The tree as nested `{left, right, height}` objects with leaf names.
    pub fn to_nested_json(&self) -> Value {
        fn node(t: &ClusterTree, id: usize) -> Value {
            let n = t.labels.len();
            if id < n {
                return Value::String(t.labels[id].clone());
            }
            let m = t.merges[id - n];
            json!({ "left": node(t, m.left), "right": node(t, m.right), "height": m.height, "size": m.size })
        }
        let root = self.labels.len() + self.merges.len() - 1;
        node(self, root)
    }
}

/// Average-linkage agglomerative clustering on `1 - |rho|`.
///
/// Cluster distances are updated with the size-weighted Lance–Williams
/// rule. Ties go to the pair with the smallest ids.
pub fn correlation_cluster(matrix: &CorrelationMatrix) -> Result<ClusterTree> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::invalid(format!("clustering needs at least 2 variables, got {n}")));
    }
    let total = 2 * n - 1;
    let mut dist = vec![vec![f64::INFINITY; total]; total];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = 1.0 - matrix.get(i, j).abs();
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                if dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (height, i, j) = best;
        let new = n + step;
        size[new] = size[i] + size[j];
        active.retain(|&k| k != i && k != j);
        for &k in &active {
            let d = (size[i] as f64 * dist[i][k] + size[j] as f64 * dist[j][k]) / size[new] as f64;
            dist[new][k] = d;
            dist[k][new] = d;
        }
        active.push(new);
        merges.push(Merge { left: i, right: j, height, size: size[new] });
    }
    Ok(ClusterTree { labels: matrix.names.clone(), merges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, values: Vec<f64>) -> CorrelationMatrix {
        CorrelationMatrix::from_values((0..n).map(|i| format!("v{i}")).collect(), values).unwrap()
    }

    #[test]
    fn perfectly_correlated_pair_merges_at_zero() {
        let t = correlation_cluster(&matrix(2, vec![1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(t.merges, vec![Merge { left: 0, right: 1, height: 0.0, size: 2 }]);
    }

    #[test]
    fn two_blocks_merge_internally_first() {
        #[rustfmt::skip]
        let m = matrix(4, vec![
            1.0, 1.0, 0.0, 0.0,
            1.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, -1.0,
            0.0, 0.0, -1.0, 1.0,
        ]);
        let t = correlation_cluster(&m).unwrap();
        let heights: Vec<f64> = t.merges.iter().map(|m| m.height).collect();
        assert_eq!(heights, vec![0.0, 0.0, 1.0]);
        assert_eq!((t.merges[0].left, t.merges[0].right), (0, 1));
        assert_eq!((t.merges[1].left, t.merges[1].right), (2, 3));
        assert_eq!(t.to_nested_json()["height"], 1.0);
    }

    #[test]
    fn single_variable_rejected() {
        assert!(correlation_cluster(&matrix(1, vec![1.0])).is_err());
    }
}
