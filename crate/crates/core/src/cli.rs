//! The `saecf` command line: preprocess, train, evaluate, recommend, benchmark.
//!
//! Every setting can also come from `--config FILE`, either flat `key = value`
//! lines or a JSON object, keyed by flag name. Flags override the file.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataio::{
    build_dataset, filter_min_counts, load_dataset, load_eval_users, parse_ratings_csv,
    parse_triplets_tsv, save_dataset, save_eval_users, split_by_user, InteractionDataset,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_split_with, RecallNormalization};
use crate::model::{load_checkpoint, predict_scores, Activation, ModelParams};
use crate::rng::DEFAULT_SEED;
use crate::trainer::{benchmark, fit, FitOptions, RunMetadata, TrainConfig, TrainMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// `userId,movieId,rating,timestamp` with a header line.
    Movielens,
    /// `user<TAB>item<TAB>count`, no header.
    Triplets,
}

#[derive(Debug, Parser)]
#[command(
    name = "saecf",
    version,
    about = "Autoencoder recommender trained with mini-batch negative sampling"
)]
pub struct Cli {
    /// Settings file (flat key=value or JSON); flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, filter, binarize and split a raw interaction file.
    Preprocess(PreprocessArgs),
    /// Train a model on a processed dataset.
    Train(TrainArgs),
    /// Score a checkpoint on validation or test users.
    Evaluate(EvaluateArgs),
    /// Print top-K items for a history file.
    Recommend(RecommendArgs),
    /// Compare sampled and full-output training throughput.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Raw ratings CSV or triplets TSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    #[arg(long)]
    pub min_user_items: Option<usize>,
    #[arg(long)]
    pub min_item_users: Option<usize>,
    /// Ratings at or above this value count as positive (movielens only).
    #[arg(long)]
    pub rating_threshold: Option<f64>,
    #[arg(long)]
    pub n_val: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub fold_in_ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Processed directory (uses train.ds, val.json) or a dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub slice_rows: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<TrainMode>,
    #[arg(long, value_enum)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Final checkpoint path.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub validate_every: Option<usize>,
    /// Run metadata JSON (default: next to the checkpoint).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `val`, `test`, or a path to an eval-user JSON file.
    #[arg(long)]
    pub split: Option<String>,
    /// Cutoff; repeat for several.
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long, value_enum)]
    pub recall_normalization: Option<RecallNormalization>,
    /// Include per-user metric rows in the report.
    #[arg(long)]
    pub per_user: bool,
    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// One external item id per line.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long = "k")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub slice_rows: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub warmup_batches: Option<usize>,
    #[arg(long)]
    pub timed_batches: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Union of every setting any command reads, as found in a config file or on
/// the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_user_items: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_item_users: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rating_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_val: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold_in_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<TrainMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validate_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup_batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timed_batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_user: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_normalization: Option<RecallNormalization>,
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Reads a config file in either supported syntax.
pub fn parse_config_str(text: &str) -> Result<CliConfig> {
    let trimmed = text.trim_start();
    let map: Map<String, Value> = if trimmed.starts_with('{') {
        let raw: Map<String, Value> = serde_json::from_str(text)?;
        raw.into_iter()
            .map(|(k, v)| (normalize_key(&k), v))
            .collect()
    } else {
        let mut map = Map::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = normalize_key(key);
            let value = value.trim();
            let parsed = if key == "k" {
                let ks = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| {
                        Error::invalid(format!("config line {}: bad k list {value:?}", lineno + 1))
                    })?;
                Value::from(ks)
            } else {
                serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_owned()))
            };
            if map.insert(key.clone(), parsed).is_some() {
                return Err(Error::invalid(format!(
                    "config line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
        }
        map
    };
    let map: Map<String, Value> = map
        .into_iter()
        .map(|(k, v)| match (k.as_str(), v) {
            ("k", Value::Number(n)) => (k, Value::Array(vec![Value::Number(n)])),
            (_, v) => (k, v),
        })
        .collect();
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::invalid(format!("config: {e}")))
}

pub fn load_config(path: &Path) -> Result<CliConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

impl CliConfig {
    /// Overlays `flags` on `self`; any setting present in `flags` wins.
    pub fn overridden_by(&self, flags: &CliConfig) -> Result<CliConfig> {
        let mut base = match serde_json::to_value(self)? {
            Value::Object(m) => m,
            _ => unreachable!("struct serializes to an object"),
        };
        if let Value::Object(top) = serde_json::to_value(flags)? {
            base.extend(top);
        }
        Ok(serde_json::from_value(Value::Object(base))?)
    }

    fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("missing required setting --{flag}")))
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            slice_rows: self.slice_rows.or(d.slice_rows),
            epochs: self.epochs.unwrap_or(d.epochs),
            dropout_p: self.dropout.unwrap_or(d.dropout_p),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            lr: self.lr.unwrap_or(d.lr),
            hidden_dim: self.hidden_dim.unwrap_or(d.hidden_dim),
            mode: self.mode.unwrap_or(d.mode),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            checkpoint_every: self.checkpoint_every.unwrap_or(d.checkpoint_every),
            activation: self.activation.unwrap_or(d.activation),
            validate_every: self.validate_every.unwrap_or(d.validate_every),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn ks(&self, default: &[usize]) -> Vec<usize> {
        self.k
            .clone()
            .filter(|k| !k.is_empty())
            .unwrap_or_else(|| default.to_vec())
    }
}

fn opt_vec(v: &[usize]) -> Option<Vec<usize>> {
    (!v.is_empty()).then(|| v.to_vec())
}

impl Command {
    /// The settings given as flags for this command.
    pub fn flags(&self) -> CliConfig {
        match self {
            Command::Preprocess(a) => CliConfig {
                data: a.data.clone(),
                format: a.format,
                min_user_items: a.min_user_items,
                min_item_users: a.min_item_users,
                rating_threshold: a.rating_threshold,
                n_val: a.n_val,
                n_test: a.n_test,
                fold_in_ratio: a.fold_in_ratio,
                seed: a.seed,
                out: a.out.clone(),
                ..Default::default()
            },
            Command::Train(a) => CliConfig {
                data: a.data.clone(),
                batch_size: a.batch_size,
                slice_rows: a.slice_rows,
                epochs: a.epochs,
                dropout: a.dropout,
                weight_decay: a.weight_decay,
                lr: a.lr,
                hidden_dim: a.hidden_dim,
                mode: a.mode,
                activation: a.activation,
                seed: a.seed,
                checkpoint: a.checkpoint.clone(),
                checkpoint_every: a.checkpoint_every,
                validate_every: a.validate_every,
                out: a.out.clone(),
                ..Default::default()
            },
            Command::Evaluate(a) => CliConfig {
                data: a.data.clone(),
                checkpoint: a.checkpoint.clone(),
                split: a.split.clone(),
                k: opt_vec(&a.k),
                recall_normalization: a.recall_normalization,
                per_user: a.per_user.then_some(true),
                out: a.out.clone(),
                ..Default::default()
            },
            Command::Recommend(a) => CliConfig {
                data: a.data.clone(),
                checkpoint: a.checkpoint.clone(),
                history: a.history.clone(),
                k: opt_vec(&a.k),
                out: a.out.clone(),
                ..Default::default()
            },
            Command::Benchmark(a) => CliConfig {
                data: a.data.clone(),
                batch_size: a.batch_size,
                slice_rows: a.slice_rows,
                dropout: a.dropout,
                hidden_dim: a.hidden_dim,
                seed: a.seed,
                warmup_batches: a.warmup_batches,
                timed_batches: a.timed_batches,
                out: a.out.clone(),
                ..Default::default()
            },
        }
    }
}

/// Dataset counts printed by `preprocess`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub sparsity_percent: f64,
    pub train_users: usize,
    pub train_items: usize,
    pub val_users: usize,
    pub test_users: usize,
    pub discarded_val: usize,
    pub discarded_test: usize,
}

pub const FULL_DATASET: &str = "full.ds";
pub const TRAIN_DATASET: &str = "train.ds";
pub const VAL_USERS: &str = "val.json";
pub const TEST_USERS: &str = "test.json";
pub const SUMMARY: &str = "summary.json";

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_preprocess(cfg: &CliConfig) -> Result<DatasetSummary> {
    let data = CliConfig::require(&cfg.data, "data")?;
    let out = CliConfig::require(&cfg.out, "out")?;
    let format = cfg.format.unwrap_or(DataFormat::Movielens);
    let (min_user_items, min_item_users, n_eval) = match format {
        DataFormat::Movielens => (5, 0, 10_000),
        DataFormat::Triplets => (20, 200, 50_000),
    };
    let min_user_items = cfg.min_user_items.unwrap_or(min_user_items);
    let min_item_users = cfg.min_item_users.unwrap_or(min_item_users);
    let n_val = cfg.n_val.unwrap_or(n_eval);
    let n_test = cfg.n_test.unwrap_or(n_eval);
    let ratio = cfg.fold_in_ratio.unwrap_or(0.8);
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!(
            "fold-in ratio {ratio} not in (0, 1)"
        )));
    }

    let raw = match format {
        DataFormat::Movielens => parse_ratings_csv(data, cfg.rating_threshold.unwrap_or(4.0))?,
        DataFormat::Triplets => {
            if cfg.rating_threshold.is_some() {
                log::warn!(
                    "--rating-threshold is ignored for triplets; every count >= 1 is positive"
                );
            }
            parse_triplets_tsv(data)?
        }
    };
    log::info!("parsed {} positive records", raw.len());
    let filtered = filter_min_counts(&raw, min_user_items, min_item_users);
    let full = build_dataset(&filtered);
    let split = split_by_user(&full, n_val, n_test, ratio, seed)?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let train_path = out.join(TRAIN_DATASET);
    save_dataset(&full, out.join(FULL_DATASET))?;
    save_dataset(&split.train, &train_path)?;
    save_eval_users(&split.val, split.train.num_items(), out.join(VAL_USERS))?;
    save_eval_users(&split.test, split.train.num_items(), out.join(TEST_USERS))?;
    if load_dataset(&train_path)? != split.train {
        return Err(Error::Format(format!(
            "{} did not read back identically",
            train_path.display()
        )));
    }

    let summary = DatasetSummary {
        users: full.num_users(),
        items: full.num_items(),
        interactions: full.nnz(),
        sparsity_percent: full.density() * 100.0,
        train_users: split.train.num_users(),
        train_items: split.train.num_items(),
        val_users: split.val.len(),
        test_users: split.test.len(),
        discarded_val: split.discarded_val,
        discarded_test: split.discarded_test,
    };
    write_json(&summary, &out.join(SUMMARY))?;
    Ok(summary)
}

/// Accepts a processed directory or a dataset file; returns the training
/// dataset path and the directory holding the split files.
fn resolve_data(data: &Path) -> (PathBuf, Option<PathBuf>) {
    if data.is_dir() {
        (data.join(TRAIN_DATASET), Some(data.to_path_buf()))
    } else {
        (data.to_path_buf(), data.parent().map(Path::to_path_buf))
    }
}

pub fn cmd_train(cfg: &CliConfig) -> Result<RunMetadata> {
    let train_cfg = cfg.train_config()?;
    let data = CliConfig::require(&cfg.data, "data")?;
    let checkpoint = CliConfig::require(&cfg.checkpoint, "checkpoint")?;
    let (ds_path, dir) = resolve_data(data);
    let ds = load_dataset(&ds_path)?;
    let val_path = dir.map(|d| d.join(VAL_USERS)).filter(|p| p.is_file());
    let val = val_path
        .map(|p| load_eval_users(p, ds.num_items()))
        .transpose()?;
    if let Some(parent) = checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let outcome = fit(
        &ds,
        &train_cfg,
        &FitOptions {
            checkpoint: Some(checkpoint.clone()),
            validation: val.as_deref(),
        },
    )?;
    let (reloaded, _) = load_checkpoint(checkpoint)?;
    if reloaded != outcome.params {
        return Err(Error::Format(format!(
            "{} did not read back identically",
            checkpoint.display()
        )));
    }
    let meta = RunMetadata::new(&ds, &train_cfg, &outcome);
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| checkpoint.with_extension("run.json"));
    write_json(&meta, &out)?;
    Ok(meta)
}

fn load_compatible(checkpoint: &Path, ds: &InteractionDataset) -> Result<ModelParams<f32>> {
    let (params, _) = load_checkpoint(checkpoint)?;
    if params.num_items() != ds.num_items() {
        return Err(Error::shape(format!(
            "checkpoint {} has {} items but the dataset has {}",
            checkpoint.display(),
            params.num_items(),
            ds.num_items()
        )));
    }
    Ok(params)
}

pub fn cmd_evaluate(cfg: &CliConfig) -> Result<crate::eval::EvalReport> {
    let data = CliConfig::require(&cfg.data, "data")?;
    let checkpoint = CliConfig::require(&cfg.checkpoint, "checkpoint")?;
    let (ds_path, dir) = resolve_data(data);
    let ds = load_dataset(&ds_path)?;
    let params = load_compatible(checkpoint, &ds)?;
    let split = cfg.split.as_deref().unwrap_or("test");
    let users_path = match (split, dir) {
        ("val", Some(d)) => d.join(VAL_USERS),
        ("test", Some(d)) => d.join(TEST_USERS),
        (other, _) => PathBuf::from(other),
    };
    let users = load_eval_users(&users_path, ds.num_items())?;
    let ks = cfg.ks(&[20, 50, 100]);
    let norm = cfg.recall_normalization.unwrap_or_default();
    let mut report = evaluate_split_with(&params, &users, &ks, norm)?;
    if !cfg.per_user.unwrap_or(false) {
        report = report.without_per_user();
    }
    let output = EvaluateOutput {
        config: EvaluateEcho {
            data: data.clone(),
            checkpoint: checkpoint.clone(),
            split: users_path,
            k: ks,
            recall_normalization: norm,
        },
        report,
    };
    match &cfg.out {
        Some(out) => write_json(&output, out)?,
        None => println!("{}", serde_json::to_string_pretty(&output)?),
    }
    Ok(output.report)
}

#[derive(Debug, Serialize)]
struct EvaluateEcho {
    data: PathBuf,
    checkpoint: PathBuf,
    split: PathBuf,
    k: Vec<usize>,
    recall_normalization: RecallNormalization,
}

/// The evaluate report file: settings echo plus the metrics.
#[derive(Debug, Serialize)]
struct EvaluateOutput {
    config: EvaluateEcho,
    #[serde(flatten)]
    report: crate::eval::EvalReport,
}

/// Reads a history file: one external item id per line, `#` comments allowed.
pub fn read_history(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// Known history indices and the ids that could not be mapped.
pub fn map_history(ds: &InteractionDataset, history: &[String]) -> (Vec<u32>, Vec<String>) {
    let mut seen = HashSet::new();
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for id in history {
        match ds.item_index(id) {
            Some(i) => {
                if seen.insert(i) {
                    known.push(i);
                }
            }
            None => unknown.push(id.clone()),
        }
    }
    known.sort_unstable();
    (known, unknown)
}

pub fn cmd_recommend(cfg: &CliConfig) -> Result<Vec<String>> {
    let data = CliConfig::require(&cfg.data, "data")?;
    let checkpoint = CliConfig::require(&cfg.checkpoint, "checkpoint")?;
    let history_path = CliConfig::require(&cfg.history, "history")?;
    let (ds_path, _) = resolve_data(data);
    let ds = load_dataset(&ds_path)?;
    let params = load_compatible(checkpoint, &ds)?;
    let (known, unknown) = map_history(&ds, &read_history(history_path)?);
    if !unknown.is_empty() {
        log::warn!(
            "skipping {} unknown item ids: {}",
            unknown.len(),
            unknown.join(", ")
        );
    }
    if known.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no known item ids",
            history_path.display()
        )));
    }
    let k = cfg.ks(&[10])[0];
    let scores = predict_scores(&params, &known)?;
    let ranked = crate::eval::top_k(&scores, k.min(ds.num_items() - known.len()));
    let ids: Vec<String> = ranked
        .iter()
        .map(|&i| ds.item_id(i as usize).to_owned())
        .collect();
    let mut text = ids.join("\n");
    text.push('\n');
    match &cfg.out {
        Some(out) => fs::write(out, &text).map_err(|e| Error::io(out, e))?,
        None => print!("{text}"),
    }
    Ok(ids)
}

pub fn cmd_benchmark(cfg: &CliConfig) -> Result<crate::trainer::BenchmarkReport> {
    let train_cfg = cfg.train_config()?;
    let data = CliConfig::require(&cfg.data, "data")?;
    let (ds_path, _) = resolve_data(data);
    let ds = load_dataset(&ds_path)?;
    let report = benchmark(
        &ds,
        &train_cfg,
        cfg.warmup_batches.unwrap_or(5),
        cfg.timed_batches.unwrap_or(20),
    )?;
    match &cfg.out {
        Some(out) => write_json(&report, out)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(report)
}

/// Resolves settings and dispatches one command.
pub fn run(cli: Cli) -> Result<()> {
    let file = cli
        .config
        .as_deref()
        .map(load_config)
        .transpose()?
        .unwrap_or_default();
    let cfg = file.overridden_by(&cli.command.flags())?;
    match cli.command {
        Command::Preprocess(_) => {
            let s = cmd_preprocess(&cfg)?;
            println!("users: {}", s.users);
            println!("items: {}", s.items);
            println!("interactions: {}", s.interactions);
            println!("sparsity: {:.3}%", s.sparsity_percent);
            println!(
                "train users: {}, val users: {}, test users: {} (discarded {} / {})",
                s.train_users, s.val_users, s.test_users, s.discarded_val, s.discarded_test
            );
        }
        Command::Train(_) => {
            let meta = cmd_train(&cfg)?;
            if let Some(last) = meta.epochs.last() {
                println!(
                    "trained {} epochs, final loss {:.4}",
                    meta.epochs.len(),
                    last.mean_loss
                );
            }
            for path in &meta.checkpoints {
                println!("wrote {}", path.display());
            }
        }
        Command::Evaluate(_) => {
            cmd_evaluate(&cfg)?;
        }
        Command::Recommend(_) => {
            cmd_recommend(&cfg)?;
        }
        Command::Benchmark(_) => {
            let r = cmd_benchmark(&cfg)?;
            eprintln!(
                "sampled {:.2} batches/s, full {:.2} batches/s, speed-up {:.2}x",
                r.sampled.batches_per_second, r.full.batches_per_second, r.speedup
            );
        }
    }
    Ok(())
}
