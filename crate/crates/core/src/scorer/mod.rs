//! Pair-probability scoring: P(gloss describes the usage in the example).
//!
//! All backends consume [`ScorerInput`] values, the example text and the gloss
//! joined by a single tab.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub mod neural;
mod oracle;
mod overlap;

pub use neural::{train, Checkpoint, NeuralScorer, TrainConfig};
pub use oracle::OracleScorer;
pub use overlap::OverlapScorer;

pub const DELIMITER: char = '\t';

/// Example text and gloss joined by one tab.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScorerInput(String);

impl ScorerInput {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `(example, gloss)`, split at the delimiter.
    pub fn parts(&self) -> (&str, &str) {
        self.0
            .split_once(DELIMITER)
            .expect("encode_pair inserts exactly one delimiter")
    }
}

impl fmt::Display for ScorerInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn detab(s: &str) -> String {
    s.replace(DELIMITER, " ")
}

/// Join example and gloss with the delimiter. Tabs inside either text become
/// spaces. No target-word markup is added.
pub fn encode_pair(example_text: &str, gloss: &str) -> Result<ScorerInput> {
    if example_text.is_empty() || gloss.is_empty() {
        return Err(Error::InvalidInput(
            "cannot encode a pair with an empty example or gloss".into(),
        ));
    }
    let mut text = detab(example_text);
    text.push(DELIMITER);
    text.push_str(&detab(gloss));
    Ok(ScorerInput(text))
}

/// A scoring backend. Implementations must be deterministic and free of
/// shared mutable state so that concurrent calls are safe.
pub trait PairScorer: Send + Sync {
    fn score(&self, inputs: &[ScorerInput]) -> Result<Vec<f64>>;
}

/// Handle to a scoring backend. The default value is uninitialized and
/// refuses to score.
#[derive(Clone, Default)]
pub struct Scorer {
    backend: Option<Arc<dyn PairScorer>>,
}

impl fmt::Debug for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scorer")
            .field("initialized", &self.backend.is_some())
            .finish()
    }
}

impl Scorer {
    pub fn new(backend: impl PairScorer + 'static) -> Self {
        Scorer {
            backend: Some(Arc::new(backend)),
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.backend.is_some()
    }
}

/// Lexical-overlap test backend; see [`OverlapScorer`].
pub fn mock_overlap_scorer() -> Scorer {
    Scorer::new(OverlapScorer)
}

/// Gold-lookup test backend; see [`OracleScorer`].
pub fn oracle_scorer(gold: &crate::corpus::DatasetSplit) -> Scorer {
    Scorer::new(OracleScorer::from_split(gold))
}

/// Score every input in order. Each probability lies in `[0, 1]`.
pub fn score_batch(scorer: &Scorer, pairs: &[ScorerInput]) -> Result<Vec<f64>> {
    let backend = scorer.backend.as_ref().ok_or(Error::UninitializedScorer)?;
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let probs = backend.score(pairs)?;
    if probs.len() != pairs.len() {
        return Err(Error::InvalidInput(format!(
            "backend returned {} scores for {} inputs",
            probs.len(),
            pairs.len()
        )));
    }
    if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidInput(format!(
            "backend returned probability {bad} outside [0, 1]"
        )));
    }
    Ok(probs)
}
