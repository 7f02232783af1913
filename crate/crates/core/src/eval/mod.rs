//! Clustering agreement and the seeded benchmark harness.

mod benchmark;

pub use benchmark::{
    run_benchmark, BenchmarkConfig, BenchmarkReport, DatasetSource, FixedParams, Generator, LinkCount, RunRecord,
    SeriesPoint, SeriesSummary,
};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Adjusted Rand Index between two labelings.
///
/// When both partitions are trivial (the expected and maximal index
/// coincide) the index is 1 for identical partitions and 0 otherwise.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter(format!("ARI needs at least 2 samples, got {}", a.len())));
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    // ARI = 2(index P - sum_a sum_b) / ((sum_a + sum_b) P - 2 sum_a sum_b)
    // with P the number of pairs; exact integers, one rounding at the end.
    let pair = |k: u64| i128::from(k * k.saturating_sub(1) / 2);
    let index: i128 = joint.values().map(|&k| pair(k)).sum();
    let sum_a: i128 = rows.values().map(|&k| pair(k)).sum();
    let sum_b: i128 = cols.values().map(|&k| pair(k)).sum();
    let total = pair(a.len() as u64);
    let num = 2 * (index * total - sum_a * sum_b);
    let den = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if den == 0 {
        let same = index == sum_a && index == sum_b;
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}
