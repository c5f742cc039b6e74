//! Descriptive statistics, correlation structure and two-sample testing.

mod cluster;
mod correlation;
mod describe;
mod ks;
mod monthly;

pub use cluster::{correlation_cluster, ClusterTree, Merge};
pub use correlation::{correlation_matrix, correlation_of_columns, pearson, CorrelationMatrix};
pub use describe::{describe, DescriptiveStats, STAT_LABELS};
pub use ks::{kolmogorov_q, ks_p_value, ks_statistic, two_sample_test, TwoSampleResult, DEFAULT_ALPHA};
pub use monthly::{monthly_aggregate, monthly_csv, MonthlyRow};

use crate::error::Result;

/// Statistic-by-variable table (statistics as rows, variables as columns).
pub fn describe_table_csv(names: &[String], stats: &[DescriptiveStats]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["Statistic".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (k, label) in STAT_LABELS.iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend(stats.iter().map(|s| s.as_row()[k].to_string()));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| crate::Error::Data(e.to_string()))
}
