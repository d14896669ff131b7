use std::collections::HashSet;

use super::{PairScorer, ScorerInput};
use crate::error::Result;

/// Jaccard overlap of lowercased whitespace token sets; 0 when both sides
/// have no tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapScorer;

fn token_set(text: &str) -> HashSet<String> {
    text.split_whitespace().map(|t| t.to_lowercase()).collect()
}

pub(crate) fn jaccard(a: &str, b: &str) -> f64 {
    let (a, b) = (token_set(a), token_set(b));
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

impl PairScorer for OverlapScorer {
    fn score(&self, inputs: &[ScorerInput]) -> Result<Vec<f64>> {
        Ok(inputs
            .iter()
            .map(|i| {
                let (example, gloss) = i.parts();
                jaccard(example, gloss)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::{encode_pair, mock_overlap_scorer, score_batch};

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard("a b c", "a b c"), 1.0);
        assert_eq!(jaccard("a b", "c d"), 0.0);
        assert_eq!(jaccard("a b c", "b c d"), 0.5);
        assert_eq!(jaccard("Cat", "cat"), 1.0);
        assert_eq!(jaccard(" ", "  "), 0.0);
    }

    #[test]
    fn shared_token_scores_higher() {
        let s = mock_overlap_scorer();
        let p = score_batch(
            &s,
            &[
                encode_pair("cat sat", "cat animal").unwrap(),
                encode_pair("cat sat", "xyz").unwrap(),
            ],
        )
        .unwrap();
        assert!(p[0] > p[1]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12);
    }
}
