//! Sentence-level BLEU over lowercased whitespace tokens.
//!
//! Modified n-gram precisions for n = 1..=4 are combined by geometric mean
//! and multiplied by the brevity penalty. An order n >= 2 with zero matches
//! uses `(0 + 1) / (total + 1)`; unigram precision is never smoothed, so a
//! candidate sharing no token with the reference scores exactly 0.
//!
//! For texts shorter than four tokens the higher orders have no n-grams at
//! all and smooth to 1, so `bleu(x, x) == 1.0` for every non-empty `x`.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

fn ngram_counts(toks: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if toks.len() >= n {
        for g in toks.windows(n) {
            *counts.entry(g).or_default() += 1;
        }
    }
    counts
}

pub fn bleu(candidate: &str, reference: &str) -> Result<f64> {
    let reference = tokens(reference);
    if reference.is_empty() {
        return Err(Error::InvalidInput("BLEU reference is empty".into()));
    }
    let candidate = tokens(candidate);
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let cand = ngram_counts(&candidate, n);
        let refc = ngram_counts(&reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| c.min(*refc.get(g).unwrap_or(&0)))
            .sum();
        let precision = if n == 1 {
            if matched == 0 {
                return Ok(0.0);
            }
            matched as f64 / total as f64
        } else if matched == 0 {
            1.0 / (total as f64 + 1.0)
        } else {
            matched as f64 / total as f64
        };
        log_sum += precision.ln();
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((bp * (log_sum / MAX_ORDER as f64).exp()).clamp(0.0, 1.0))
}
