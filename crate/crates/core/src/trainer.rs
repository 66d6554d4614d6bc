//! Epoch orchestration, checkpointing and the throughput benchmark.

use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dataio::{EvalUser, InteractionDataset};
use crate::error::{Error, Result};
use crate::eval::evaluate_split;
use crate::linalg::Scalar;
use crate::model::{
    apply_input_dropout, backward, bce_loss_and_grad, forward, init_params, save_checkpoint,
    Activation, CheckpointMeta, ColumnSet, ModelParams,
};
use crate::optim::{AdamConfig, AdamState};
use crate::rng::{self, PRNG_NAME, STREAM_DROPOUT};
use crate::sampler::{
    all_columns, downsample_columns, gather_batch, plan_epoch, slice_batch, SampledBatch,
};

/// Output layer coverage during training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// Reconstruct only the batch's column union; lazy sparse updates.
    #[default]
    Sampled,
    /// Reconstruct every item; dense updates.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Rows per optimizer step; `None` trains each batch whole.
    pub slice_rows: Option<usize>,
    pub epochs: usize,
    pub dropout_p: f64,
    pub weight_decay: f64,
    pub lr: f64,
    pub hidden_dim: usize,
    pub mode: TrainMode,
    pub seed: u64,
    /// Write an extra checkpoint every this many epochs (0 disables).
    pub checkpoint_every: usize,
    pub activation: Activation,
    pub decay_biases: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Validation NDCG@50 cadence in epochs (0 disables).
    pub validate_every: usize,
    /// Prepare the next batch on a second thread while the current one trains.
    pub prefetch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 500,
            slice_rows: None,
            epochs: 100,
            dropout_p: 0.5,
            weight_decay: 2e-5,
            lr: 1e-3,
            hidden_dim: 200,
            mode: TrainMode::Sampled,
            seed: rng::DEFAULT_SEED,
            checkpoint_every: 0,
            activation: Activation::Tanh,
            decay_biases: false,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validate_every: 1,
            prefetch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("hidden_dim", self.hidden_dim),
            ("slice_rows", self.slice_rows.unwrap_or(1)),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::invalid(format!(
                "dropout {} not in [0, 1)",
                self.dropout_p
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || self.epsilon <= 0.0
        {
            return Err(Error::invalid(
                "Adam betas must be in [0, 1) and epsilon positive",
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    fn slice_rows(&self) -> usize {
        self.slice_rows.unwrap_or(self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub batches: usize,
    /// Optimizer steps (one per slice).
    pub steps: usize,
    pub mean_sampled_input_size: f64,
    pub std_sampled_input_size: f64,
    pub wall_seconds: f64,
    pub batches_per_second: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_ndcg_at_50: Option<f64>,
}

fn prepare_batch(ds: &InteractionDataset, users: &[u32], mode: TrainMode) -> Result<SampledBatch> {
    let sparse = gather_batch(ds, users)?;
    Ok(match mode {
        TrainMode::Sampled => downsample_columns(&sparse),
        TrainMode::Full => all_columns(&sparse, ds.num_items()),
    })
}

/// Trains on one prepared batch, slicing it as configured. Returns the summed
/// per-row loss and the number of steps taken.
fn train_batch<T: Scalar>(
    params: &mut ModelParams<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
    batch: &SampledBatch,
    rng: &mut dyn RngCore,
    scratch: &mut Vec<T>,
) -> Result<(f64, usize)> {
    let mut loss_sum = 0.0;
    let mut steps = 0;
    for slice in slice_batch(batch, cfg.slice_rows())? {
        let rows = slice.num_rows();
        if rows == 0 {
            continue;
        }
        let columns = match cfg.mode {
            TrainMode::Sampled => ColumnSet::Subset(slice.columns().clone()),
            TrainMode::Full => ColumnSet::All,
        };
        let input = apply_input_dropout(&slice, cfg.dropout_p, rng)?;
        let cache = forward(params, input, columns)?;
        let (loss, dlogits) = bce_loss_and_grad(&cache.logits, &slice.dense(), rows)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss {loss} after {steps} steps")));
        }
        let grads = backward(params, &cache, &dlogits)?;
        match cfg.mode {
            TrainMode::Sampled => state.step_sparse(params, &grads)?,
            TrainMode::Full => state.step_dense(params, &grads, scratch)?,
        }
        loss_sum += loss * rows as f64;
        steps += 1;
    }
    Ok((loss_sum, steps))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One shuffled pass over all users.
pub fn train_epoch<T: Scalar>(
    ds: &InteractionDataset,
    params: &mut ModelParams<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<EpochStats> {
    cfg.validate()?;
    if params.num_items() != ds.num_items() {
        return Err(Error::shape(format!(
            "model has {} items, dataset has {}",
            params.num_items(),
            ds.num_items()
        )));
    }
    let started = Instant::now();
    let plan = plan_epoch(ds.num_users(), cfg.batch_size, cfg.seed, epoch as u64)?;
    let mut rng = rng::stream(cfg.seed, STREAM_DROPOUT, epoch as u64);
    let mut scratch = Vec::new();
    let mut sizes = Vec::with_capacity(plan.num_batches());
    let mut loss_sum = 0.0;
    let mut steps = 0;

    let mut consume = |index: usize, batch: Result<SampledBatch>| -> Result<()> {
        let batch = batch?;
        sizes.push(batch.width() as f64);
        let (loss, n) = train_batch(params, state, cfg, &batch, &mut rng, &mut scratch).map_err(
            |e| match e {
                Error::NonFinite(msg) => {
                    Error::NonFinite(format!("epoch {epoch}, batch {index}: {msg}"))
                }
                other => other,
            },
        )?;
        loss_sum += loss;
        steps += n;
        Ok(())
    };

    if cfg.prefetch {
        std::thread::scope(|s| -> Result<()> {
            let (tx, rx) = sync_channel(2);
            let plan = &plan;
            s.spawn(move || {
                for users in plan.batches() {
                    if tx.send(prepare_batch(ds, users, cfg.mode)).is_err() {
                        break;
                    }
                }
            });
            for (index, batch) in rx.iter().enumerate() {
                consume(index, batch)?;
            }
            Ok(())
        })?;
    } else {
        for (index, users) in plan.batches().enumerate() {
            consume(index, prepare_batch(ds, users, cfg.mode))?;
        }
    }

    let wall_seconds = started.elapsed().as_secs_f64();
    let batches = sizes.len();
    let (mean_size, std_size) = mean_std(&sizes);
    Ok(EpochStats {
        epoch,
        mean_loss: if ds.num_users() == 0 {
            0.0
        } else {
            loss_sum / ds.num_users() as f64
        },
        batches,
        steps,
        mean_sampled_input_size: mean_size,
        std_sampled_input_size: std_size,
        wall_seconds,
        batches_per_second: if wall_seconds > 0.0 {
            batches as f64 / wall_seconds
        } else {
            0.0
        },
        val_ndcg_at_50: None,
    })
}

/// Where and how `fit` writes checkpoints and validates.
#[derive(Debug, Clone, Default)]
pub struct FitOptions<'a> {
    /// Final checkpoint path; periodic ones go next to it as `<stem>.epoch<N>.<ext>`.
    pub checkpoint: Option<PathBuf>,
    pub validation: Option<&'a [EvalUser]>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: ModelParams<f32>,
    pub epochs: Vec<EpochStats>,
    pub checkpoints: Vec<PathBuf>,
    pub wall_seconds: f64,
}

/// Path of the periodic checkpoint written after `epoch`.
pub fn periodic_checkpoint_path(final_path: &Path, epoch: usize) -> PathBuf {
    let stem = final_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("checkpoint");
    let name = match final_path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.epoch{epoch}.{ext}"),
        None => format!("{stem}.epoch{epoch}"),
    };
    final_path.with_file_name(name)
}

fn checkpoint_meta(cfg: &TrainConfig, epochs: usize) -> Result<CheckpointMeta> {
    Ok(CheckpointMeta {
        seed: cfg.seed,
        epochs,
        activation: cfg.activation,
        config: serde_json::to_value(cfg)?,
    })
}

/// Initialises a model and trains it for `cfg.epochs` epochs in 32-bit floats.
pub fn fit(
    ds: &InteractionDataset,
    cfg: &TrainConfig,
    opts: &FitOptions<'_>,
) -> Result<FitOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let mut params: ModelParams<f32> =
        init_params(ds.num_items(), cfg.hidden_dim, cfg.activation, cfg.seed)?;
    let mut state = AdamState::new(&params, cfg.adam(), cfg.decay_biases);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut checkpoints = Vec::new();
    for epoch in 1..=cfg.epochs {
        let mut stats = train_epoch(ds, &mut params, &mut state, cfg, epoch)?;
        if let Some(val) = opts.validation.filter(|v| !v.is_empty()) {
            if cfg.validate_every > 0 && epoch % cfg.validate_every == 0 {
                stats.val_ndcg_at_50 = evaluate_split(&params, val, &[50])?.get("ndcg@50");
            }
        }
        log::info!(
            "epoch {epoch}: loss {:.4}, {} batches, input size {:.0} ± {:.0}, {:.2} batches/s{}",
            stats.mean_loss,
            stats.batches,
            stats.mean_sampled_input_size,
            stats.std_sampled_input_size,
            stats.batches_per_second,
            stats
                .val_ndcg_at_50
                .map(|v| format!(", val ndcg@50 {v:.4}"))
                .unwrap_or_default()
        );
        epochs.push(stats);
        if let Some(path) = &opts.checkpoint {
            if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
                let p = periodic_checkpoint_path(path, epoch);
                save_checkpoint(&params, &checkpoint_meta(cfg, epoch)?, &p)?;
                checkpoints.push(p);
            }
        }
    }
    if let Some(path) = &opts.checkpoint {
        save_checkpoint(&params, &checkpoint_meta(cfg, cfg.epochs)?, path)?;
        checkpoints.push(path.clone());
    }
    Ok(FitOutcome {
        params,
        epochs,
        checkpoints,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// JSON record of a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: TrainConfig,
    pub seed: u64,
    pub prng: String,
    pub num_users: usize,
    pub num_items: usize,
    pub nnz: usize,
    pub epochs: Vec<EpochStats>,
    pub checkpoints: Vec<PathBuf>,
    pub wall_seconds: f64,
}

impl RunMetadata {
    pub fn new(ds: &InteractionDataset, cfg: &TrainConfig, outcome: &FitOutcome) -> Self {
        Self {
            config: cfg.clone(),
            seed: cfg.seed,
            prng: PRNG_NAME.to_owned(),
            num_users: ds.num_users(),
            num_items: ds.num_items(),
            nnz: ds.nnz(),
            epochs: outcome.epochs.clone(),
            checkpoints: outcome.checkpoints.clone(),
            wall_seconds: outcome.wall_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeThroughput {
    pub batches_per_second: f64,
    pub wall_seconds: f64,
    pub mean_input_size: f64,
    pub std_input_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub num_users: usize,
    pub num_items: usize,
    pub batch_size: usize,
    pub warmup_batches: usize,
    pub timed_batches: usize,
    pub sampled: ModeThroughput,
    pub full: ModeThroughput,
    /// `sampled.batches_per_second / full.batches_per_second`.
    pub speedup: f64,
}

fn batch_sequence(
    ds: &InteractionDataset,
    cfg: &TrainConfig,
    count: usize,
) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::with_capacity(count);
    let mut epoch = 1;
    while out.len() < count {
        let plan = plan_epoch(ds.num_users(), cfg.batch_size, cfg.seed, epoch)?;
        out.extend(plan.batches().take(count - out.len()).map(<[u32]>::to_vec));
        epoch += 1;
        if ds.num_users() == 0 {
            return Err(Error::invalid("dataset has no users"));
        }
    }
    Ok(out)
}

fn run_mode(
    ds: &InteractionDataset,
    cfg: &TrainConfig,
    mode: TrainMode,
    batches: &[Vec<u32>],
    warmup: usize,
) -> Result<ModeThroughput> {
    let cfg = TrainConfig {
        mode,
        ..cfg.clone()
    };
    let mut params: ModelParams<f32> =
        init_params(ds.num_items(), cfg.hidden_dim, cfg.activation, cfg.seed)?;
    let mut state = AdamState::new(&params, cfg.adam(), cfg.decay_biases);
    let mut rng = rng::stream(cfg.seed, STREAM_DROPOUT, 0);
    let mut scratch = Vec::new();
    let mut sizes = Vec::new();
    let mut started = Instant::now();
    for (i, users) in batches.iter().enumerate() {
        if i == warmup {
            started = Instant::now();
        }
        let batch = prepare_batch(ds, users, mode)?;
        if i >= warmup {
            sizes.push(batch.width() as f64);
        }
        train_batch(
            &mut params,
            &mut state,
            &cfg,
            &batch,
            &mut rng,
            &mut scratch,
        )?;
    }
    let wall_seconds = started.elapsed().as_secs_f64();
    let (mean, std) = mean_std(&sizes);
    Ok(ModeThroughput {
        batches_per_second: sizes.len() as f64 / wall_seconds.max(f64::MIN_POSITIVE),
        wall_seconds,
        mean_input_size: mean,
        std_input_size: std,
    })
}

/// Trains the same batch sequence in both modes from the same initial
/// parameters and compares batches per second.
pub fn benchmark(
    ds: &InteractionDataset,
    cfg: &TrainConfig,
    warmup_batches: usize,
    timed_batches: usize,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if timed_batches == 0 {
        return Err(Error::invalid("timed_batches must be at least 1"));
    }
    let batches = batch_sequence(ds, cfg, warmup_batches + timed_batches)?;
    let sampled = run_mode(ds, cfg, TrainMode::Sampled, &batches, warmup_batches)?;
    let full = run_mode(ds, cfg, TrainMode::Full, &batches, warmup_batches)?;
    Ok(BenchmarkReport {
        num_users: ds.num_users(),
        num_items: ds.num_items(),
        batch_size: cfg.batch_size,
        warmup_batches,
        timed_batches,
        speedup: sampled.batches_per_second / full.batches_per_second,
        sampled,
        full,
    })
}
