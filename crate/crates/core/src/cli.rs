//! Subcommands of the `sensematch` binary.
//!
//! Each `cmd_*` function is an ordinary library call so the pipeline can be
//! driven from tests without spawning processes. Training configuration is
//! resolved as command-line flags over an optional TOML file over the
//! per-language defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Deserialize;

use crate::assigner::{
    assign, compose_submission, sweep_threshold, AssignPolicy, NovelIdMode, SweepResult,
    DEFAULT_GRID, DEFAULT_THRESHOLD,
};
use crate::corpus::{load_predictions, load_split, save_predictions, DatasetSplit};
use crate::error::{Error, Result};
use crate::glossmatch::{definitions_needed, match_definitions};
use crate::lang::Language;
use crate::metrics::{
    merge_reports, score_subtask1, score_subtask2, BagOfWords, EmbeddingBackend, EncoderEmbeddings,
    EvaluationReport,
};
use crate::pairgen::{build_training_set, load_pairs, save_pairs};
use crate::scorer::{
    mock_overlap_scorer, oracle_scorer, Checkpoint, NeuralScorer, Scorer, TrainConfig,
};
use crate::wiktionary::{
    build_corpus, coverage_report, BuildOptions, ClientConfig, CoverageReport, DefinitionCorpus,
    DirTransport, HarvestOutcome, WiktionaryClient, DIR_SCHEME,
};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "sensematch",
    version,
    about = "Novel word-sense detection and definition matching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a data split into a labelled gloss/usage pair file.
    Prepare(PrepareArgs),
    /// Train a pair classifier and write its best checkpoint.
    Train(TrainArgs),
    /// Assign senses to new-period usages and write a submission.
    Predict(PredictArgs),
    /// Pick a decision threshold on a development split.
    Sweep(SweepArgs),
    /// Fetch Wiktionary definitions for the words with novel senses.
    Harvest(HarvestArgs),
    /// Attach the best-matching harvested definition to each novel usage.
    Match(MatchArgs),
    /// Score submissions against gold splits.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PeriodFilter {
    All,
    Old,
}

#[derive(Debug, Clone, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub language: Language,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Restrict to old-period usages and senses.
    #[arg(long, value_enum, default_value_t = PeriodFilter::All)]
    pub period: PeriodFilter,
    /// Hold out this share of the pairs (stratified by label) as a dev set.
    #[arg(long, requires = "dev_out")]
    pub dev_fraction: Option<f64>,
    #[arg(long, requires = "dev_fraction")]
    pub dev_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub language: Option<Language>,
    /// Checkpoint directory.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with any of the training fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub grad_accum_steps: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub half_precision: Option<bool>,
    #[arg(long)]
    pub adapter: Option<bool>,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    /// Trained checkpoint (`--checkpoint`).
    Checkpoint,
    /// Lexical overlap baseline.
    Mock,
    /// Gold lookup (`--gold`, or the data split itself).
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct ScorerArgs {
    #[arg(long, value_enum, default_value_t = ScorerKind::Checkpoint)]
    pub scorer: ScorerKind,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Gold split for the oracle scorer.
    #[arg(long)]
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub language: Language,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "per_usage", value_parser = NovelIdMode::from_str)]
    pub novel_id_mode: NovelIdMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub language: Language,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value = "per_usage", value_parser = NovelIdMode::from_str)]
    pub novel_id_mode: NovelIdMode,
    /// Write the per-threshold scores here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HarvestArgs {
    #[arg(long)]
    pub submission: PathBuf,
    #[arg(long)]
    pub language: Language,
    /// Definition cache; appended to and resumed from.
    #[arg(long)]
    pub cache: PathBuf,
    /// Requests per second.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Edition base URL, e.g. `https://fi.wiktionary.org`, or `dir://<path>`
    /// to read saved pages from `<path>/<lang>/<title>.html`.
    #[arg(long)]
    pub base_url: Option<String>,
    /// Write the coverage report as TSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub submission: PathBuf,
    /// Definition cache written by `harvest`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub language: Language,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subtask {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Bag-of-words one-hot token vectors.
    Bow,
    /// Token vectors of a trained checkpoint (`--checkpoint`).
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Tsv,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Gold split; repeat once per language, aligned with `--pred` and `--language`.
    #[arg(long, required = true)]
    pub gold: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub language: Vec<Language>,
    #[arg(long, value_enum, default_value_t = Subtask::Both)]
    pub subtask: Subtask,
    #[arg(long, value_enum, default_value_t = BackendKind::Bow)]
    pub backend: BackendKind,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    /// Also write the report as TSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Training fields accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub model_identifier: Option<String>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub grad_accum_steps: Option<usize>,
    pub learning_rate: Option<f64>,
    pub half_precision: Option<bool>,
    pub adapter: Option<bool>,
    pub warm_start_checkpoint: Option<PathBuf>,
    pub seed: Option<u64>,
    pub max_tokens: Option<usize>,
}

impl TrainOverrides {
    fn apply(self, c: &mut TrainConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            model_identifier,
            epochs,
            batch_size,
            grad_accum_steps,
            learning_rate,
            half_precision,
            adapter,
            seed,
            max_tokens
        );
        if self.warm_start_checkpoint.is_some() {
            c.warm_start_checkpoint = self.warm_start_checkpoint;
        }
    }
}

impl TrainArgs {
    fn overrides(&self) -> TrainOverrides {
        TrainOverrides {
            model_identifier: self.model.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            grad_accum_steps: self.grad_accum_steps,
            learning_rate: self.learning_rate,
            half_precision: self.half_precision,
            adapter: self.adapter,
            warm_start_checkpoint: self.warm_start.clone(),
            seed: self.seed,
            max_tokens: self.max_tokens,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Training configuration for `args`: flags over `--config` over the
/// defaults of the language (Russian defaults when none is given).
pub fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut config = args
        .language
        .map_or_else(TrainConfig::default, TrainConfig::for_language);
    if let Some(path) = &args.config {
        let text = read_text(path)?;
        let file: TrainOverrides = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        file.apply(&mut config);
    }
    args.overrides().apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn build_scorer(
    args: &ScorerArgs,
    data: Option<&DatasetSplit>,
    language: Language,
) -> Result<Scorer> {
    match args.scorer {
        ScorerKind::Mock => Ok(mock_overlap_scorer()),
        ScorerKind::Checkpoint => {
            let dir = args.checkpoint.as_ref().ok_or_else(|| {
                Error::InvalidInput("--scorer checkpoint needs --checkpoint <dir>".into())
            })?;
            Ok(Scorer::new(NeuralScorer::load(dir)?))
        }
        ScorerKind::Oracle => match (&args.gold, data) {
            (Some(path), _) => Ok(oracle_scorer(&load_split(path, language)?)),
            (None, Some(split)) => Ok(oracle_scorer(split)),
            (None, None) => Err(Error::InvalidInput(
                "--scorer oracle needs --gold <split>".into(),
            )),
        },
    }
}

/// Write the shuffled pair file of a split; optionally hold out a dev part.
pub fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let split = load_split(&args.data, args.language)?;
    let split = match args.period {
        PeriodFilter::All => split,
        PeriodFilter::Old => split.old_period_view(),
    };
    let pairs = build_training_set(&split, args.seed);
    match (args.dev_fraction, &args.dev_out) {
        (Some(fraction), Some(dev_out)) => {
            let (train, dev) = pairs.split_dev(fraction, args.seed)?;
            save_pairs(&train, &args.out)?;
            save_pairs(&dev, dev_out)?;
            info!("{} train pairs, {} dev pairs", train.len(), dev.len());
        }
        (None, None) => {
            save_pairs(&pairs, &args.out)?;
            info!("{} pairs ({} positive)", pairs.len(), pairs.positives());
        }
        _ => {
            return Err(Error::InvalidInput(
                "--dev-fraction and --dev-out go together".into(),
            ))
        }
    }
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<Checkpoint> {
    let config = resolve_train_config(args)?;
    let language = args.language.unwrap_or(Language::Ru);
    let train = load_pairs(&args.train, language)?;
    let dev = load_pairs(&args.dev, language)?;
    info!(
        "training {} (adapter={}, effective batch {})",
        config.model_identifier,
        config.adapter,
        config.effective_batch()
    );
    crate::scorer::train(&train, &dev, &config, &args.out)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let split = load_split(&args.data, args.language)?;
    let scorer = build_scorer(&args.scorer, Some(&split), args.language)?;
    let policy = AssignPolicy::new(args.threshold, args.novel_id_mode)?;
    let records = compose_submission(&assign(&split, &scorer, &policy)?, &split)?;
    save_predictions(&records, &args.out, false)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepResult> {
    let dev = load_split(&args.dev, args.language)?;
    let scorer = build_scorer(&args.scorer, Some(&dev), args.language)?;
    let grid = args.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let result = sweep_threshold(&dev, &scorer, &grid, args.novel_id_mode)?;
    if let Some(out) = &args.out {
        write_text(out, &result.to_tsv())?;
    }
    Ok(result)
}

fn harvest_client(args: &HarvestArgs) -> Result<WiktionaryClient> {
    let mut config = ClientConfig {
        requests_per_second: args.rate,
        retries: args.retries,
        ..ClientConfig::default()
    };
    match &args.base_url {
        Some(url) if url.starts_with(DIR_SCHEME) => {
            let root = &url[DIR_SCHEME.len()..];
            config.base_urls.insert(
                args.language,
                format!("{DIR_SCHEME}{}", args.language.code()),
            );
            WiktionaryClient::new(DirTransport::new(root), config)
        }
        Some(url) => {
            config.base_urls.insert(args.language, url.clone());
            WiktionaryClient::http(config)
        }
        None => WiktionaryClient::http(config),
    }
}

pub fn cmd_harvest(args: &HarvestArgs) -> Result<(HarvestOutcome, CoverageReport)> {
    let records = load_predictions(&args.submission)?;
    let words = definitions_needed(&records, args.language);
    let client = harvest_client(args)?;
    let options = BuildOptions {
        workers: args.workers,
        ..BuildOptions::default()
    };
    let outcome = build_corpus(&words, &client, &args.cache, &options)?;
    let report = coverage_report(&outcome.corpus, &words);
    if let Some(path) = &args.report {
        write_text(path, &report.to_tsv())?;
    }
    Ok((outcome, report))
}

pub fn cmd_match(args: &MatchArgs) -> Result<()> {
    let records = load_predictions(&args.submission)?;
    let corpus = DefinitionCorpus::load(&args.corpus)?;
    let scorer = build_scorer(&args.scorer, None, args.language)?;
    let matched = match_definitions(&records, &corpus, &scorer, args.language)?;
    save_predictions(&matched, &args.out, true)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluationReport> {
    if args.gold.len() != args.pred.len() || args.gold.len() != args.language.len() {
        return Err(Error::InvalidInput(
            "--gold, --pred and --language must be given the same number of times".into(),
        ));
    }
    let mut golds = Vec::new();
    let mut preds = Vec::new();
    for ((g, p), l) in args.gold.iter().zip(&args.pred).zip(&args.language) {
        golds.push(load_split(g, *l)?);
        preds.push(load_predictions(p)?);
    }
    let runs: Vec<(&DatasetSplit, &[_])> = golds
        .iter()
        .zip(&preds)
        .map(|(g, p)| (g, p.as_slice()))
        .collect();
    let s1 = || score_subtask1(&runs);
    let s2 = || -> Result<EvaluationReport> {
        let backend: Box<dyn EmbeddingBackend> = match args.backend {
            BackendKind::Bow => Box::new(BagOfWords),
            BackendKind::Checkpoint => {
                let dir = args.checkpoint.as_ref().ok_or_else(|| {
                    Error::InvalidInput("--backend checkpoint needs --checkpoint <dir>".into())
                })?;
                Box::new(EncoderEmbeddings::new(NeuralScorer::load(dir)?))
            }
        };
        score_subtask2(&runs, backend.as_ref())
    };
    let report = match args.subtask {
        Subtask::One => s1()?,
        Subtask::Two => s2()?,
        Subtask::Both => merge_reports(&s1()?, &s2()?),
    };
    if let Some(out) = &args.out {
        write_text(out, &report.to_tsv())?;
    }
    Ok(report)
}

/// Run one parsed command, printing its human-readable result to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => cmd_prepare(&a),
        Command::Train(a) => {
            let ckpt = cmd_train(&a)?;
            println!(
                "best epoch {} (dev F1 {:.4}) saved to {}",
                ckpt.epoch,
                ckpt.dev_f1,
                ckpt.path.display()
            );
            Ok(())
        }
        Command::Predict(a) => cmd_predict(&a),
        Command::Sweep(a) => {
            let result = cmd_sweep(&a)?;
            print!("{}", result.to_tsv());
            println!("best threshold {}", result.best_threshold);
            Ok(())
        }
        Command::Harvest(a) => {
            let (outcome, report) = cmd_harvest(&a)?;
            println!(
                "fetched {} forms, {} already cached, {} failed",
                outcome.fetched,
                outcome.skipped,
                outcome.failures.len()
            );
            for f in &outcome.failures {
                println!("  {}:{}: {}", f.language, f.surface_form, f.error);
            }
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Match(a) => cmd_match(&a),
        Command::Evaluate(a) => {
            let report = cmd_evaluate(&a)?;
            match a.format {
                ReportFormat::Table => print!("{}", report.to_table()),
                ReportFormat::Tsv => print!("{}", report.to_tsv()),
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("train.toml");
        fs::write(&cfg, "epochs = 3\nbatch_size = 16\n").unwrap();
        let args = TrainArgs {
            language: Some(Language::Fi),
            config: Some(cfg),
            batch_size: Some(8),
            ..TrainArgs::default()
        };
        let c = resolve_train_config(&args).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.batch_size, 8);
        assert_eq!(c.grad_accum_steps, 3);
        assert!(c.half_precision);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("train.toml");
        fs::write(&cfg, "epochs = 3\nwarmup = 10\n").unwrap();
        let args = TrainArgs {
            config: Some(cfg),
            ..TrainArgs::default()
        };
        assert!(matches!(
            resolve_train_config(&args),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn german_defaults_need_warm_start_only_for_zero_epochs() {
        let c = resolve_train_config(&TrainArgs {
            language: Some(Language::De),
            ..TrainArgs::default()
        })
        .unwrap();
        assert_eq!(c.effective_batch(), 288);
        let err = resolve_train_config(&TrainArgs {
            language: Some(Language::De),
            epochs: Some(0),
            ..TrainArgs::default()
        });
        assert!(err.is_err());
    }
}
