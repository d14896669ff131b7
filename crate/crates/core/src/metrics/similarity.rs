//! Greedy token-alignment similarity (BERTScore F1 without rescaling).

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::scorer::NeuralScorer;

/// Supplies the token-to-token similarity matrix of two texts.
pub trait EmbeddingBackend: Send + Sync {
    /// `m[i][j]` is the similarity of candidate token `i` and reference
    /// token `j`.
    fn similarity_matrix(&self, candidate: &str, reference: &str) -> Result<Vec<Vec<f64>>>;
}

/// One-hot token vectors over lowercased whitespace tokens: two tokens have
/// cosine 1 when equal and 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct BagOfWords;

impl EmbeddingBackend for BagOfWords {
    fn similarity_matrix(&self, candidate: &str, reference: &str) -> Result<Vec<Vec<f64>>> {
        let toks =
            |s: &str| -> Vec<String> { s.split_whitespace().map(str::to_lowercase).collect() };
        let (c, r) = (toks(candidate), toks(reference));
        Ok(c.iter()
            .map(|a| r.iter().map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect())
    }
}

/// Token vectors taken from a trained pair-classifier checkpoint.
#[derive(Debug, Clone)]
pub struct EncoderEmbeddings {
    scorer: NeuralScorer,
}

impl EncoderEmbeddings {
    pub fn new(scorer: NeuralScorer) -> Self {
        EncoderEmbeddings { scorer }
    }
}

pub fn cosine_matrix(a: &[Vec<f32>], b: &[Vec<f32>]) -> Result<Vec<Vec<f64>>> {
    let norm = |v: &[f32]| v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let dims: HashSet<usize> = a.iter().chain(b).map(Vec::len).collect();
    if dims.len() > 1 {
        return Err(Error::InvalidInput(
            "token vectors differ in dimension".into(),
        ));
    }
    if a.iter().chain(b).flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite token vector".into()));
    }
    Ok(a.iter()
        .map(|x| {
            let nx = norm(x);
            b.iter()
                .map(|y| {
                    let ny = norm(y);
                    if nx == 0.0 || ny == 0.0 {
                        return 0.0;
                    }
                    let d: f64 = x
                        .iter()
                        .zip(y)
                        .map(|(p, q)| f64::from(*p) * f64::from(*q))
                        .sum();
                    d / (nx * ny)
                })
                .collect()
        })
        .collect())
}

impl EmbeddingBackend for EncoderEmbeddings {
    fn similarity_matrix(&self, candidate: &str, reference: &str) -> Result<Vec<Vec<f64>>> {
        cosine_matrix(
            &self.scorer.token_vectors(candidate),
            &self.scorer.token_vectors(reference),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy max-similarity alignment in both directions.
pub fn similarity_scores(
    candidate: &str,
    reference: &str,
    backend: &dyn EmbeddingBackend,
) -> Result<SimilarityScore> {
    if candidate.trim().is_empty() || reference.trim().is_empty() {
        return Err(Error::InvalidInput(
            "similarity needs two non-empty texts".into(),
        ));
    }
    let m = backend.similarity_matrix(candidate, reference)?;
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("a text produced no tokens".into()));
    }
    let precision = m
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / rows as f64;
    let recall = (0..cols)
        .map(|j| m.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / cols as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SimilarityScore {
        precision: precision.clamp(0.0, 1.0),
        recall: recall.clamp(0.0, 1.0),
        f1: f1.clamp(0.0, 1.0),
    })
}

/// F1 of [`similarity_scores`].
pub fn semantic_similarity(
    candidate: &str,
    reference: &str,
    backend: &dyn EmbeddingBackend,
) -> Result<f64> {
    similarity_scores(candidate, reference, backend).map(|s| s.f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bag_of_words_hand_case() {
        let s = similarity_scores("cat sits", "cat sleeps", &BagOfWords).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn self_similarity_and_symmetry() {
        let a = "a small grey cat";
        let b = "the cat is grey";
        assert!((semantic_similarity(a, a, &BagOfWords).unwrap() - 1.0).abs() < 1e-6);
        let ab = semantic_similarity(a, b, &BagOfWords).unwrap();
        let ba = semantic_similarity(b, a, &BagOfWords).unwrap();
        assert!((ab - ba).abs() < 1e-6);
    }

    #[test]
    fn empty_text_errors() {
        assert!(semantic_similarity("", "x", &BagOfWords).is_err());
        assert!(semantic_similarity("x", " ", &BagOfWords).is_err());
    }

    #[test]
    fn cosine_of_parallel_vectors() {
        let m = cosine_matrix(&[vec![1.0, 2.0]], &[vec![2.0, 4.0], vec![-2.0, 1.0]]).unwrap();
        assert!((m[0][0] - 1.0).abs() < 1e-12);
        assert!(m[0][1].abs() < 1e-12);
    }
}
