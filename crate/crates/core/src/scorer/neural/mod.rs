//! Trainable pair classifier.
//!
//! The encoder is a hashed word/trigram embedding table selected by
//! `model_identifier`; see [`encoder_preset`]. With `adapter = true` only the
//! bottleneck adapter and the head are trained.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Language;
use crate::scorer::{PairScorer, ScorerInput};

mod checkpoint;
pub(crate) mod model;
pub(crate) mod tokenize;
mod train;

pub use checkpoint::{read_log, Checkpoint, EpochStats, OptimizerConfig};
pub use train::train;

use model::{Architecture, Model};

pub const LARGE_ENCODER: &str = "xlm-roberta-large";
pub const BASE_ENCODER: &str = "xlm-roberta-base";
pub const SMALL_ENCODER: &str = "hashed-small";
pub const TINY_ENCODER: &str = "hashed-tiny";

/// Encoder sizes known to the built-in backend.
pub fn encoder_preset(model_identifier: &str) -> Result<EncoderPreset> {
    let preset = match model_identifier {
        LARGE_ENCODER => EncoderPreset {
            dim: 64,
            buckets: 1 << 15,
            bottleneck: 16,
        },
        BASE_ENCODER => EncoderPreset {
            dim: 32,
            buckets: 1 << 14,
            bottleneck: 8,
        },
        SMALL_ENCODER => EncoderPreset {
            dim: 24,
            buckets: 1 << 12,
            bottleneck: 8,
        },
        TINY_ENCODER => EncoderPreset {
            dim: 8,
            buckets: 1 << 10,
            bottleneck: 4,
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown model identifier {other:?}; expected one of \
                 {LARGE_ENCODER}, {BASE_ENCODER}, {SMALL_ENCODER}, {TINY_ENCODER}"
            )))
        }
    };
    Ok(preset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderPreset {
    pub dim: usize,
    pub buckets: usize,
    pub bottleneck: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model_identifier: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_accum_steps: usize,
    pub learning_rate: f64,
    pub half_precision: bool,
    pub adapter: bool,
    pub warm_start_checkpoint: Option<PathBuf>,
    pub seed: u64,
    /// Maximum number of words per encoded pair.
    pub max_tokens: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_language(Language::Ru)
    }
}

impl TrainConfig {
    /// Per-language training setups. German continues from a Finnish
    /// checkpoint, which the caller supplies via `warm_start_checkpoint`.
    pub fn for_language(language: Language) -> Self {
        let base = TrainConfig {
            model_identifier: BASE_ENCODER.into(),
            epochs: 50,
            batch_size: 144,
            grad_accum_steps: 1,
            learning_rate: 5e-4,
            half_precision: false,
            adapter: true,
            warm_start_checkpoint: None,
            seed: 42,
            max_tokens: 256,
        };
        match language {
            Language::Ru => base,
            Language::Fi => TrainConfig {
                model_identifier: LARGE_ENCODER.into(),
                epochs: 10,
                batch_size: 128,
                grad_accum_steps: 3,
                half_precision: true,
                ..base
            },
            Language::De => TrainConfig {
                model_identifier: LARGE_ENCODER.into(),
                epochs: 20,
                batch_size: 48,
                grad_accum_steps: 6,
                half_precision: true,
                ..base
            },
        }
    }

    pub fn effective_batch(&self) -> usize {
        self.batch_size * self.grad_accum_steps
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.grad_accum_steps == 0 || self.max_tokens == 0 {
            return Err(Error::InvalidInput(
                "batch size, accumulation steps and max tokens must be positive".into(),
            ));
        }
        if self.epochs == 0 && self.warm_start_checkpoint.is_none() {
            return Err(Error::InvalidInput(
                "zero epochs is only meaningful with a warm-start checkpoint".into(),
            ));
        }
        encoder_preset(&self.model_identifier)?;
        Ok(())
    }

    pub(crate) fn architecture(&self) -> Result<Architecture> {
        let p = encoder_preset(&self.model_identifier)?;
        Ok(Architecture {
            dim: p.dim,
            buckets: p.buckets,
            bottleneck: self.adapter.then_some(p.bottleneck),
        })
    }
}

/// Inference over a loaded checkpoint.
#[derive(Debug, Clone)]
pub struct NeuralScorer {
    model: Model,
    max_tokens: usize,
}

impl NeuralScorer {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let (config, model) = checkpoint::load_model(dir.as_ref())?;
        Ok(NeuralScorer {
            model,
            max_tokens: config.max_tokens,
        })
    }

    pub fn probability(&self, input: &ScorerInput) -> f64 {
        let toks = tokenize::encode(input, self.model.arch.buckets, self.max_tokens);
        f64::from(self.model.probability(&toks))
    }

    /// Hidden state of every word of `text`, encoded as a single segment.
    pub fn token_vectors(&self, text: &str) -> Vec<Vec<f32>> {
        let toks = tokenize::encode_text(text, self.model.arch.buckets);
        self.model.token_states(&toks)
    }
}

impl PairScorer for NeuralScorer {
    fn score(&self, inputs: &[ScorerInput]) -> Result<Vec<f64>> {
        Ok(inputs.iter().map(|i| self.probability(i)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_defaults() {
        let fi = TrainConfig::for_language(Language::Fi);
        assert_eq!(fi.model_identifier, LARGE_ENCODER);
        assert_eq!(
            (fi.epochs, fi.batch_size, fi.grad_accum_steps),
            (10, 128, 3)
        );
        assert!(fi.half_precision);
        assert_eq!(fi.effective_batch(), 384);

        let ru = TrainConfig::for_language(Language::Ru);
        assert_eq!(ru.model_identifier, BASE_ENCODER);
        assert_eq!(
            (ru.epochs, ru.batch_size, ru.grad_accum_steps),
            (50, 144, 1)
        );

        let de = TrainConfig::for_language(Language::De);
        assert_eq!((de.epochs, de.batch_size, de.grad_accum_steps), (20, 48, 6));
        assert!(de.half_precision);

        for lang in Language::ALL {
            let c = TrainConfig::for_language(lang);
            assert_eq!(c.learning_rate, 5e-4);
            assert!(c.adapter);
            c.validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_config() {
        let c = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            model_identifier: "bert-base".into(),
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
