//! Checkpoint directory: `config.toml`, `weights.bin`, `train_log.tsv`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::Model;
use super::TrainConfig;
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const LOG_FILE: &str = "train_log.tsv";

const WEIGHTS_MAGIC: &[u8; 4] = b"SMW1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub name: String,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub schedule: String,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            name: "adam".into(),
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            schedule: "constant".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Selection {
    epoch: usize,
    dev_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConfigFile {
    train: TrainConfig,
    optimizer: OptimizerConfig,
    selection: Selection,
}

/// The selected model of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub path: PathBuf,
    pub dev_f1: f64,
    pub epoch: usize,
    pub config: TrainConfig,
    pub optimizer: OptimizerConfig,
    /// Per-epoch evaluation log of the run that produced this checkpoint.
    pub history: Vec<EpochStats>,
}

fn ckpt_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub(crate) fn save_model(
    dir: &Path,
    model: &Model,
    config: &TrainConfig,
    optimizer: &OptimizerConfig,
    epoch: usize,
    dev_f1: f64,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file = ConfigFile {
        train: config.clone(),
        optimizer: optimizer.clone(),
        selection: Selection { epoch, dev_f1 },
    };
    let text = toml::to_string(&file).map_err(|e| Error::Serialization(e.to_string()))?;
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, text).map_err(|e| Error::io(&cfg_path, e))?;

    let mut blob = Vec::with_capacity(12 + 4 * model.params.len());
    blob.extend_from_slice(WEIGHTS_MAGIC);
    blob.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        blob.extend_from_slice(&p.to_le_bytes());
    }
    let w_path = dir.join(WEIGHTS_FILE);
    fs::write(&w_path, blob).map_err(|e| Error::io(&w_path, e))
}

fn read_config(dir: &Path) -> Result<ConfigFile> {
    let cfg_path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
    toml::from_str(&text).map_err(|e| ckpt_err(&cfg_path, e.to_string()))
}

pub(crate) fn load_model(dir: &Path) -> Result<(TrainConfig, Model)> {
    let cfg = read_config(dir)?;
    let arch = cfg.train.architecture()?;
    let w_path = dir.join(WEIGHTS_FILE);
    let blob = fs::read(&w_path).map_err(|e| Error::io(&w_path, e))?;
    if blob.len() < 12 || &blob[..4] != WEIGHTS_MAGIC {
        return Err(ckpt_err(&w_path, "not a weights file"));
    }
    let count = u64::from_le_bytes(blob[4..12].try_into().expect("8 bytes")) as usize;
    let body = &blob[12..];
    if body.len() != count * 4 {
        return Err(ckpt_err(&w_path, "truncated weights"));
    }
    let params: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let model = Model::from_params(arch, params, cfg.train.half_precision).ok_or_else(|| {
        ckpt_err(
            &w_path,
            "weight count does not match the configured encoder",
        )
    })?;
    Ok((cfg.train, model))
}

pub(crate) fn write_log(dir: &Path, history: &[EpochStats]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut text = String::from("epoch\ttrain_loss\tdev_f1\n");
    for h in history {
        text.push_str(&format!("{}\t{}\t{}\n", h.epoch, h.train_loss, h.dev_f1));
    }
    let path = dir.join(LOG_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Per-epoch log of a checkpoint directory.
pub fn read_log(dir: impl AsRef<Path>) -> Result<Vec<EpochStats>> {
    let path = dir.as_ref().join(LOG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, line)| {
            let perr = |m: String| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: m,
            };
            let f: Vec<&str> = line.split('\t').collect();
            let [epoch, loss, f1] = f[..] else {
                return Err(perr(format!("expected 3 columns, found {}", f.len())));
            };
            Ok(EpochStats {
                epoch: epoch.parse().map_err(|e| perr(format!("{e}")))?,
                train_loss: loss.parse().map_err(|e| perr(format!("{e}")))?,
                dev_f1: f1.parse().map_err(|e| perr(format!("{e}")))?,
            })
        })
        .collect()
}

impl Checkpoint {
    /// Read the checkpoint metadata stored in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let cfg = read_config(dir)?;
        let history = if dir.join(LOG_FILE).exists() {
            read_log(dir)?
        } else {
            Vec::new()
        };
        Ok(Checkpoint {
            path: dir.to_path_buf(),
            dev_f1: cfg.selection.dev_f1,
            epoch: cfg.selection.epoch,
            config: cfg.train,
            optimizer: cfg.optimizer,
            history,
        })
    }
}
