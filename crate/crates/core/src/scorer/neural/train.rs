use std::ops::Range;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{self, Checkpoint, EpochStats, OptimizerConfig};
use super::model::{bce_with_logit, sigmoid, Model};
use super::tokenize::{self, Token};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::metrics::binary_f1;
use crate::pairgen::PairDataset;
use crate::scorer::encode_pair;

/// Decision threshold for the checkpoint-selection F1.
pub const SELECTION_THRESHOLD: f64 = 0.5;

struct Adam {
    cfg: OptimizerConfig,
    m: Vec<f32>,
    v: Vec<f32>,
    t: i32,
}

impl Adam {
    fn new(cfg: OptimizerConfig, size: usize) -> Self {
        Adam {
            cfg,
            m: vec![0.0; size],
            v: vec![0.0; size],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f32], grad: &[f32], ranges: &[Range<usize>], lr: f64) {
        self.t += 1;
        let (b1, b2) = (self.cfg.beta1 as f32, self.cfg.beta2 as f32);
        let eps = self.cfg.epsilon as f32;
        let wd = self.cfg.weight_decay as f32;
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let lr = lr as f32;
        for r in ranges {
            for i in r.clone() {
                let g = grad[i] + wd * params[i];
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
                let mhat = self.m[i] / c1;
                let vhat = self.v[i] / c2;
                params[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

struct Encoded {
    tokens: Vec<Token>,
    label: bool,
}

fn encode_dataset(ds: &PairDataset, buckets: usize, max_tokens: usize) -> Result<Vec<Encoded>> {
    ds.pairs
        .iter()
        .map(|p| {
            let input = encode_pair(&p.example_text, &p.gloss)?;
            Ok(Encoded {
                tokens: tokenize::encode(&input, buckets, max_tokens),
                label: p.label,
            })
        })
        .collect()
}

fn dev_f1(model: &Model, dev: &[Encoded]) -> f64 {
    let gold: Vec<bool> = dev.iter().map(|e| e.label).collect();
    let pred: Vec<bool> = dev
        .iter()
        .map(|e| f64::from(model.probability(&e.tokens)) >= SELECTION_THRESHOLD)
        .collect();
    binary_f1(&gold, &pred)
}

fn initial_model(config: &TrainConfig) -> Result<Model> {
    let arch = config.architecture()?;
    let Some(dir) = &config.warm_start_checkpoint else {
        return Ok(Model::init(
            arch,
            &config.model_identifier,
            config.seed,
            config.half_precision,
        ));
    };
    let (prev, model) = checkpoint::load_model(dir)?;
    if prev.model_identifier != config.model_identifier || prev.adapter != config.adapter {
        return Err(Error::Checkpoint {
            path: dir.clone(),
            message: format!(
                "warm-start checkpoint uses encoder {:?} (adapter={}), config asks for {:?} (adapter={})",
                prev.model_identifier, prev.adapter, config.model_identifier, config.adapter
            ),
        });
    }
    Ok(
        Model::from_params(model.arch, model.params, config.half_precision)
            .expect("architecture unchanged"),
    )
}

/// Train on `train`, evaluate binary F1 on `dev` after every epoch and keep
/// the best epoch in `out_dir`. Ties keep the earlier epoch. With zero epochs
/// the (warm-start) initial model is evaluated and saved unchanged.
pub fn train(
    train: &PairDataset,
    dev: &PairDataset,
    config: &TrainConfig,
    out_dir: impl AsRef<Path>,
) -> Result<Checkpoint> {
    let out_dir = out_dir.as_ref();
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Training(
            "train and dev sets must be non-empty".into(),
        ));
    }
    let dev_pos = dev.positives();
    if dev_pos == 0 || dev_pos == dev.len() {
        return Err(Error::Training(
            "dev set must contain both labels for F1-based selection".into(),
        ));
    }

    let optimizer = OptimizerConfig::default();
    let mut model = initial_model(config)?;
    let buckets = model.arch.buckets;
    let train_enc = encode_dataset(train, buckets, config.max_tokens)?;
    let dev_enc = encode_dataset(dev, buckets, config.max_tokens)?;
    let trainable = model.layout.trainable(&model.arch);
    let mut adam = Adam::new(optimizer.clone(), model.layout.total());
    let mut grad = vec![0.0f32; model.layout.total()];

    let mut history = Vec::new();
    let mut best: Option<(usize, f64)> = None;

    if config.epochs == 0 {
        let f1 = dev_f1(&model, &dev_enc);
        checkpoint::save_model(out_dir, &model, config, &optimizer, 0, f1)?;
        best = Some((0, f1));
    }

    let mut order: Vec<usize> = (0..train_enc.len()).collect();
    for epoch in 1..=config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        let mut pending = 0usize;
        let batches: Vec<&[usize]> = order.chunks(config.batch_size).collect();
        let n_batches = batches.len();
        for (bi, batch) in batches.into_iter().enumerate() {
            for &i in batch {
                let ex = &train_enc[i];
                let target = if ex.label { 1.0 } else { 0.0 };
                let pass = model.forward(&ex.tokens);
                loss_sum += f64::from(bce_with_logit(pass.logit, target));
                model.backward(&pass, sigmoid(pass.logit) - target, &ex.tokens, &mut grad);
            }
            pending += batch.len();
            let boundary = (bi + 1) % config.grad_accum_steps == 0 || bi + 1 == n_batches;
            if boundary {
                let scale = 1.0 / pending as f32;
                for r in &trainable {
                    for g in &mut grad[r.clone()] {
                        *g *= scale;
                    }
                }
                adam.step(&mut model.params, &grad, &trainable, config.learning_rate);
                model.refresh();
                grad.iter_mut().for_each(|g| *g = 0.0);
                pending = 0;
            }
        }

        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train_enc.len() as f64,
            dev_f1: dev_f1(&model, &dev_enc),
        };
        info!(
            "epoch {epoch}: train loss {:.4}, dev F1 {:.4}",
            stats.train_loss, stats.dev_f1
        );
        history.push(stats);
        if best.is_none_or(|(_, f)| stats.dev_f1 > f) {
            checkpoint::save_model(out_dir, &model, config, &optimizer, epoch, stats.dev_f1)?;
            best = Some((epoch, stats.dev_f1));
        }
        checkpoint::write_log(out_dir, &history)?;
    }
    if config.epochs == 0 {
        checkpoint::write_log(out_dir, &history)?;
    }

    let (epoch, dev_f1) = best.expect("at least one evaluation");
    Ok(Checkpoint {
        path: out_dir.to_path_buf(),
        dev_f1,
        epoch,
        config: config.clone(),
        optimizer,
        history,
    })
}
