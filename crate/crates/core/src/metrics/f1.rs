use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use crate::error::{Error, Result};

/// Unweighted mean of per-class F1 over the classes present in `gold`.
/// Predictions of labels absent from gold count only against recall.
pub fn macro_f1<T: Hash + Eq>(gold: &[T], pred: &[T]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "label length mismatch: gold={}, pred={}",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput(
            "macro-F1 needs at least one item".into(),
        ));
    }
    let classes: HashSet<&T> = gold.iter().collect();
    let mut tp: HashMap<&T, usize> = HashMap::new();
    let mut fp: HashMap<&T, usize> = HashMap::new();
    let mut fnc: HashMap<&T, usize> = HashMap::new();
    for (g, p) in gold.iter().zip(pred) {
        if g == p {
            *tp.entry(g).or_default() += 1;
        } else {
            *fnc.entry(g).or_default() += 1;
            *fp.entry(p).or_default() += 1;
        }
    }
    let total: f64 = classes
        .iter()
        .map(|c| {
            let t = *tp.get(c).unwrap_or(&0) as f64;
            let denom =
                2.0 * t + *fp.get(c).unwrap_or(&0) as f64 + *fnc.get(c).unwrap_or(&0) as f64;
            2.0 * t / denom
        })
        .sum();
    Ok(total / classes.len() as f64)
}

/// F1 of the positive class; 0 when there are no positives at all.
pub fn binary_f1(gold: &[bool], pred: &[bool]) -> f64 {
    let (mut tp, mut fp, mut fnc) = (0usize, 0usize, 0usize);
    for (&g, &p) in gold.iter().zip(pred) {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fnc += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fnc;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Confusion-matrix oracle: per-class precision and recall, then F1.
    fn oracle(gold: &[&str], pred: &[&str]) -> f64 {
        let classes: Vec<&str> = {
            let mut c: Vec<&str> = gold.to_vec();
            c.sort();
            c.dedup();
            c
        };
        let f1s: Vec<f64> = classes
            .iter()
            .map(|c| {
                let tp = gold
                    .iter()
                    .zip(pred)
                    .filter(|(g, p)| *g == c && *p == c)
                    .count() as f64;
                let npred = pred.iter().filter(|p| *p == c).count() as f64;
                let ngold = gold.iter().filter(|g| *g == c).count() as f64;
                let prec = if npred == 0.0 { 0.0 } else { tp / npred };
                let rec = tp / ngold;
                if prec + rec == 0.0 {
                    0.0
                } else {
                    2.0 * prec * rec / (prec + rec)
                }
            })
            .collect();
        f1s.iter().sum::<f64>() / f1s.len() as f64
    }

    #[test]
    fn hand_case() {
        let gold = ["A", "A", "B"];
        let pred = ["A", "B", "B"];
        let expected = oracle(&gold, &pred);
        assert!((expected - 2.0 / 3.0).abs() < 1e-12);
        assert!((macro_f1(&gold, &pred).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn extremes() {
        assert_eq!(macro_f1(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(macro_f1(&["a", "b"], &["b", "a"]).unwrap(), 0.0);
        assert_eq!(macro_f1(&["a", "a"], &["novel:x", "novel:y"]).unwrap(), 0.0);
        assert!(macro_f1(&["a"], &[]).is_err());
    }

    #[test]
    fn matches_oracle_on_mixed_labels() {
        let gold = ["a", "b", "c", "a", "b", "a", "c"];
        let pred = ["a", "a", "c", "x", "b", "a", "b"];
        assert!((macro_f1(&gold, &pred).unwrap() - oracle(&gold, &pred)).abs() < 1e-12);
    }

    #[test]
    fn binary() {
        assert_eq!(binary_f1(&[true, false], &[true, false]), 1.0);
        assert_eq!(binary_f1(&[true, true, false], &[true, false, true]), 0.5);
        assert_eq!(binary_f1(&[false], &[false]), 0.0);
    }
}
