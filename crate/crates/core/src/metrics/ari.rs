use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

fn comb2(n: usize) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// True when both labelings induce the same partition, up to renaming.
pub fn same_partition<A: Hash + Eq, B: Hash + Eq>(left: &[A], right: &[B]) -> bool {
    if left.len() != right.len() {
        return false;
    }
    let mut fwd: HashMap<&A, &B> = HashMap::new();
    let mut back: HashMap<&B, &A> = HashMap::new();
    left.iter()
        .zip(right)
        .all(|(a, b)| *fwd.entry(a).or_insert(b) == b && *back.entry(b).or_insert(a) == a)
}

/// Pair-counting Adjusted Rand Index. When the chance-corrected denominator
/// vanishes the result is 1.0 for identical partitions and 0.0 otherwise.
pub fn adjusted_rand_index<A: Hash + Eq, B: Hash + Eq>(gold: &[A], pred: &[B]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "label length mismatch: gold={}, pred={}",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("ARI needs at least one item".into()));
    }
    let mut rows: HashMap<&A, usize> = HashMap::new();
    let mut cols: HashMap<&B, usize> = HashMap::new();
    let mut cells: HashMap<(&A, &B), usize> = HashMap::new();
    for (a, b) in gold.iter().zip(pred) {
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
        *cells.entry((a, b)).or_default() += 1;
    }
    // (index - expected) / (max - expected), scaled by 2 * C(n, 2) so both
    // sides are exact integers and the only rounding is the final division.
    let index: i128 = cells.values().map(|&n| comb2(n)).sum();
    let sum_rows: i128 = rows.values().map(|&n| comb2(n)).sum();
    let sum_cols: i128 = cols.values().map(|&n| comb2(n)).sum();
    let total = comb2(gold.len());
    let num = 2 * (index * total - sum_rows * sum_cols);
    let denom = (sum_rows + sum_cols) * total - 2 * sum_rows * sum_cols;
    if denom == 0 {
        return Ok(if same_partition(gold, pred) { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / denom as f64)
}
