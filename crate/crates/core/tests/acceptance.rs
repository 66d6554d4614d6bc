//! Acceptance criteria. Every test prints exactly one status line:
//! `[acceptance] criterion N: PASS | FAIL | NOT RUN | <measurements>`.
//!
//! Criteria 1-4 need the MovieLens 20M ratings file: set `SAECF_ML20M` to
//! `ratings.csv`. Criterion 3 also needs `SAECF_LONG=1` (a full 100-epoch run).
//! The optional million-song suite reads `SAECF_MSD` (`train_triplets.txt`).

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use saecf::dataio::{
    build_dataset, filter_min_counts, parse_ratings_csv, parse_triplets_tsv, split_by_user,
    InteractionDataset, SplitDataset,
};
use saecf::eval::{evaluate_split, ndcg_at_k, recall_at_k, top_k};
use saecf::model::{
    bce_loss_and_grad, forward, init_params, Activation, ColumnSet, ModelParams, SparseRows,
};
use saecf::optim::AdamState;
use saecf::rng::DEFAULT_SEED;
use saecf::sampler::{
    all_columns, downsample_columns, gather_batch, inclusion_probability_approx,
    inclusion_probability_exact, plan_epoch,
};
use saecf::trainer::{benchmark, fit, train_epoch, FitOptions, TrainConfig};

// criterion 1
const ML_USERS: usize = 136_677;
const ML_ITEMS: usize = 20_108;
const ML_INTERACTIONS: f64 = 10.0e6;
const ML_INTERACTIONS_TOL: f64 = 0.05e6;
const PREPROCESS_BUDGET: Duration = Duration::from_secs(5 * 60);
// criterion 2
const ML_INPUT_SIZE: f64 = 5085.0;
const INPUT_SIZE_REL_TOL: f64 = 0.10;
const INPUT_SIZE_STD_MAX: f64 = 800.0;
const INPUT_SIZE_BUDGET: Duration = Duration::from_secs(10 * 60);
// criterion 3
const ML_RECALL20_MIN: f64 = 0.37;
const ML_RECALL50_MIN: f64 = 0.50;
const ML_NDCG100_MIN: f64 = 0.40;
const RANDOM_FLOOR_FACTOR: f64 = 10.0;
// criterion 4
const ML_SPEEDUP_MIN: f64 = 1.8;
// criterion 5 (optional suite)
const MSD_USERS: usize = 571_355;
const MSD_ITEMS: usize = 41_140;
const MSD_INTERACTIONS: f64 = 33.6e6;
const MSD_LARGE_USERS: usize = 629_112;
const MSD_LARGE_ITEMS: usize = 98_485;
const MSD_LARGE_INTERACTIONS: f64 = 39.7e6;
const MSD_INPUT_SIZE: f64 = 15_430.0;
const MSD_RECALL20_MIN: f64 = 0.25;
const MSD_RECALL50_MIN: f64 = 0.33;
const MSD_NDCG100_MIN: f64 = 0.30;
// criterion 6
const FD_STEP: f64 = 1e-5;
const FD_REL_ERR_MAX: f64 = 1e-5;
// criterion 7
const RESTRICTION_TRIALS: usize = 100;
// criterion 8
const MC_USERS: usize = 200;
const MC_BATCH: usize = 20;
const MC_EPOCHS: u64 = 20_000;
const MC_SIGMAS: f64 = 4.0;
const APPROX_USERS: usize = 5_000;
const APPROX_REL_TOL: f64 = 0.10;
const APPROX_MAX_FRACTION: f64 = 0.2;
const APPROX_MIN_BATCH: usize = 50;
// criterion 9
const METRIC_TRIALS: usize = 1_000;
// criterion 10
const SCALING_MAX_RATIO: f64 = 2.5;

/// Criteria run one at a time so timings do not share the CPU.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, pass: Option<bool>, detail: &str) {
    let status = match pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "NOT RUN",
    };
    let line = format!("[acceptance] criterion {id}: {status} | {detail}\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert_ne!(pass, Some(false), "criterion {id} failed: {detail}");
}

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var)
        .map(PathBuf::from)
        .filter(|p| p.is_file())
}

fn long_runs() -> bool {
    std::env::var("SAECF_LONG").is_ok_and(|v| v == "1")
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (
        mean,
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt(),
    )
}

struct Ml20m {
    full: InteractionDataset,
    split: SplitDataset,
    preprocess_time: Duration,
}

fn ml20m() -> Option<&'static Ml20m> {
    static DATA: OnceLock<Option<Ml20m>> = OnceLock::new();
    DATA.get_or_init(|| {
        let path = env_path("SAECF_ML20M")?;
        let t = Instant::now();
        let raw = parse_ratings_csv(&path, 4.0).expect("parse ratings");
        let full = build_dataset(&filter_min_counts(&raw, 5, 0));
        let preprocess_time = t.elapsed();
        let split = split_by_user(&full, 10_000, 10_000, 0.8, DEFAULT_SEED).expect("split");
        Some(Ml20m {
            full,
            split,
            preprocess_time,
        })
    })
    .as_ref()
}

const NO_ML20M: &str = "MovieLens 20M not available (set SAECF_ML20M to ratings.csv)";

fn epoch_input_sizes(ds: &InteractionDataset, m: usize, seed: u64) -> Vec<f64> {
    let plan = plan_epoch(ds.num_users(), m, seed, 1).unwrap();
    plan.batches()
        .map(|users| downsample_columns(&gather_batch(ds, users).unwrap()).width() as f64)
        .collect()
}

#[test]
fn criterion_01_ml20m_preprocessing_counts() {
    let _g = serial();
    let Some(ml) = ml20m() else {
        return report("1", None, NO_ML20M);
    };
    let ds = &ml.full;
    let pass = ds.num_users() == ML_USERS
        && ds.num_items() == ML_ITEMS
        && (ds.nnz() as f64 - ML_INTERACTIONS).abs() <= ML_INTERACTIONS_TOL
        && ml.preprocess_time < PREPROCESS_BUDGET;
    report(
        "1",
        Some(pass),
        &format!(
            "users {} (want {ML_USERS}), items {} (want {ML_ITEMS}), interactions {} (want 10.0M +- 0.05M), {:.1}s (budget {}s)",
            ds.num_users(),
            ds.num_items(),
            ds.nnz(),
            ml.preprocess_time.as_secs_f64(),
            PREPROCESS_BUDGET.as_secs()
        ),
    );
}

#[test]
fn criterion_02_ml20m_sampled_input_size() {
    let _g = serial();
    let Some(ml) = ml20m() else {
        return report("2", None, NO_ML20M);
    };
    let t = Instant::now();
    let sizes = epoch_input_sizes(&ml.split.train, 500, DEFAULT_SEED);
    let elapsed = t.elapsed();
    let (mean, std) = mean_std(&sizes);
    let pass = (mean - ML_INPUT_SIZE).abs() <= INPUT_SIZE_REL_TOL * ML_INPUT_SIZE
        && std < INPUT_SIZE_STD_MAX
        && elapsed < INPUT_SIZE_BUDGET;
    report(
        "2",
        Some(pass),
        &format!(
            "mean input size {mean:.1} (want {ML_INPUT_SIZE} +- 10%), std {std:.1} (want < {INPUT_SIZE_STD_MAX}), {} batches, {:.1}s",
            sizes.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03_ml20m_recommendation_quality() {
    let _g = serial();
    let Some(ml) = ml20m() else {
        return report("3", None, NO_ML20M);
    };
    if !long_runs() {
        return report("3", None, "100-epoch training skipped (set SAECF_LONG=1)");
    }
    let cfg = TrainConfig {
        epochs: 100,
        ..Default::default()
    };
    let t = Instant::now();
    let out = fit(
        &ml.split.train,
        &cfg,
        &FitOptions {
            checkpoint: None,
            validation: Some(&ml.split.val),
        },
    )
    .unwrap();
    let trained = evaluate_split(&out.params, &ml.split.test, &[20, 50, 100]).unwrap();
    let random: ModelParams<f32> = init_params(
        ml.split.train.num_items(),
        cfg.hidden_dim,
        cfg.activation,
        cfg.seed,
    )
    .unwrap();
    let floor = evaluate_split(&random, &ml.split.test, &[100]).unwrap();
    let (r20, r50, n100) = (
        trained.get("recall@20").unwrap(),
        trained.get("recall@50").unwrap(),
        trained.get("ndcg@100").unwrap(),
    );
    let n100_random = floor.get("ndcg@100").unwrap();
    let pass = r20 >= ML_RECALL20_MIN
        && r50 >= ML_RECALL50_MIN
        && n100 >= ML_NDCG100_MIN
        && n100 >= RANDOM_FLOOR_FACTOR * n100_random;
    report(
        "3",
        Some(pass),
        &format!(
            "recall@20 {r20:.4} (>= {ML_RECALL20_MIN}), recall@50 {r50:.4} (>= {ML_RECALL50_MIN}), ndcg@100 {n100:.4} (>= {ML_NDCG100_MIN}), untrained ndcg@100 {n100_random:.4}, {:.0}s",
            t.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_04_ml20m_throughput() {
    let _g = serial();
    let Some(ml) = ml20m() else {
        return report("4", None, NO_ML20M);
    };
    let cfg = TrainConfig::default();
    let r = benchmark(&ml.split.train, &cfg, 3, 20).unwrap();
    report(
        "4",
        Some(r.speedup >= ML_SPEEDUP_MIN),
        &format!(
            "sampled {:.2} batches/s (input {:.0}), full {:.2} batches/s (input {:.0}), speed-up {:.2}x (want >= {ML_SPEEDUP_MIN}x)",
            r.sampled.batches_per_second,
            r.sampled.mean_input_size,
            r.full.batches_per_second,
            r.full.mean_input_size,
            r.speedup
        ),
    );
}

/// Synthetic stand-in sized like the movie dataset: 20,108 items, about 73
/// interactions per user, popularity skew tuned so a 500-user batch touches
/// roughly 5,000 items.
#[test]
fn criterion_04s_synthetic_throughput() {
    let _g = serial();
    let items = 20_108;
    let rows = common::zipf_rows(20_000, items, 73, 1.15, 44);
    let ds = InteractionDataset::from_rows(rows, items).unwrap();
    let cfg = TrainConfig::default();
    let r = benchmark(&ds, &cfg, 2, 8).unwrap();
    let applies = r.sampled.mean_input_size < items as f64 / 2.0;
    report(
        "4s",
        Some(applies && r.speedup > 1.0),
        &format!(
            "synthetic |I|={items}: sampled {:.2} batches/s (input {:.0} +- {:.0}), full {:.2} batches/s, speed-up {:.2}x (want > 1 when input < |I|/2; {ML_SPEEDUP_MIN}x is the movie-data target)",
            r.sampled.batches_per_second,
            r.sampled.mean_input_size,
            r.sampled.std_input_size,
            r.full.batches_per_second,
            r.speedup
        ),
    );
}

#[test]
fn criterion_05_msd_suite() {
    let _g = serial();
    let Some(path) = env_path("SAECF_MSD") else {
        return report(
            "5",
            None,
            "optional song-dataset suite (set SAECF_MSD to train_triplets.txt); criteria 6-10 stand in",
        );
    };
    let raw = parse_triplets_tsv(&path).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, min_users, want) in [
        ("MSD", 200, (MSD_USERS, MSD_ITEMS, MSD_INTERACTIONS)),
        (
            "MSD-Large",
            50,
            (MSD_LARGE_USERS, MSD_LARGE_ITEMS, MSD_LARGE_INTERACTIONS),
        ),
    ] {
        let ds = build_dataset(&filter_min_counts(&raw, 20, min_users));
        pass &= ds.num_users() == want.0
            && ds.num_items() == want.1
            && (ds.nnz() as f64 - want.2).abs() <= ML_INTERACTIONS_TOL;
        details.push(format!(
            "{name}: {} users / {} items / {} interactions (want {} / {} / {:.1}M)",
            ds.num_users(),
            ds.num_items(),
            ds.nnz(),
            want.0,
            want.1,
            want.2 / 1e6
        ));
        if name == "MSD" {
            let split = split_by_user(&ds, 50_000, 50_000, 0.8, DEFAULT_SEED).unwrap();
            let (mean, std) = mean_std(&epoch_input_sizes(&split.train, 500, DEFAULT_SEED));
            pass &= (mean - MSD_INPUT_SIZE).abs() <= INPUT_SIZE_REL_TOL * MSD_INPUT_SIZE
                && std < INPUT_SIZE_STD_MAX;
            details.push(format!(
                "input size {mean:.0} +- {std:.0} (want {MSD_INPUT_SIZE} +- 10%, std < 800)"
            ));
            if long_runs() {
                let cfg = TrainConfig {
                    epochs: 80,
                    ..Default::default()
                };
                let out = fit(&split.train, &cfg, &FitOptions::default()).unwrap();
                let rep = evaluate_split(&out.params, &split.test, &[20, 50, 100]).unwrap();
                let (r20, r50, n100) = (
                    rep.get("recall@20").unwrap(),
                    rep.get("recall@50").unwrap(),
                    rep.get("ndcg@100").unwrap(),
                );
                pass &=
                    r20 >= MSD_RECALL20_MIN && r50 >= MSD_RECALL50_MIN && n100 >= MSD_NDCG100_MIN;
                details.push(format!(
                    "recall@20 {r20:.4}, recall@50 {r50:.4}, ndcg@100 {n100:.4}"
                ));
            }
        }
    }
    report("5", Some(pass), &details.join("; "));
}

#[test]
fn criterion_06_gradient_oracle() {
    let _g = serial();
    let t = Instant::now();
    let rows = common::random_rows(6, 9, 0.35, 606);
    let ds = InteractionDataset::from_rows(rows, 9).unwrap();
    let sb = all_columns(&gather_batch(&ds, &[0, 1, 2, 3, 4, 5]).unwrap(), 9);
    let mut params: ModelParams<f64> = init_params(9, 4, Activation::Tanh, 606).unwrap();
    let mut r = common::rng(607);
    for b in params.b_enc.iter_mut().chain(params.b_dec.iter_mut()) {
        *b = r.random_range(-0.5..0.5);
    }
    let input = SparseRows::from_batch(&sb);
    let targets = sb.dense();
    let a = common::grad::analytic(&params, &input, &targets, &ColumnSet::All);
    let n = common::grad::numeric(&params, &input, &targets, &ColumnSet::All, FD_STEP);
    let errs = common::grad::relative_errors(&a, &n);
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let detail = common::grad::GROUPS
        .iter()
        .zip(errs)
        .map(|(g, e)| format!("{g} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        "6",
        Some(worst < FD_REL_ERR_MAX),
        &format!(
            "6x9, d=4, h={FD_STEP:e}: {detail} (want < {FD_REL_ERR_MAX:e}), {:.2}s",
            t.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_07_restriction_identity() {
    let _g = serial();
    let mut r = common::rng(707);
    let mut mismatches = 0;
    for trial in 0..RESTRICTION_TRIALS {
        let users = r.random_range(1..12);
        let items = r.random_range(2..25);
        let rows = common::random_rows(users, items, r.random_range(0.05..0.5), trial as u64);
        let ds = InteractionDataset::from_rows(rows, items).unwrap();
        let params: ModelParams<f64> =
            init_params(items, r.random_range(1..7), Activation::Tanh, trial as u64).unwrap();
        let ids: Vec<u32> = (0..users as u32).collect();
        let sparse = gather_batch(&ds, &ids).unwrap();

        let sampled = downsample_columns(&sparse);
        let cols = sampled.columns().clone();
        let cache = forward(
            &params,
            SparseRows::from_batch(&sampled),
            ColumnSet::Subset(cols.clone()),
        )
        .unwrap();
        let (sampled_loss, _) = bce_loss_and_grad(&cache.logits, &sampled.dense(), users).unwrap();

        let full = all_columns(&sparse, items);
        let full_cache = forward(&params, SparseRows::from_batch(&full), ColumnSet::All).unwrap();
        let full_targets = full.dense();
        let mut kept_logits = Vec::new();
        let mut kept_targets = Vec::new();
        for row in 0..users {
            for &c in cols.iter() {
                kept_logits.push(full_cache.logits[row * items + c as usize]);
                kept_targets.push(full_targets[row * items + c as usize]);
            }
        }
        let (restricted_loss, _) = bce_loss_and_grad(&kept_logits, &kept_targets, users).unwrap();
        if sampled_loss != restricted_loss || cache.logits != kept_logits {
            mismatches += 1;
        }
    }
    report(
        "7",
        Some(mismatches == 0),
        &format!("{mismatches} of {RESTRICTION_TRIALS} random batches differ from the column-restricted full loss (want exact equality)"),
    );
}

#[test]
fn criterion_08_inclusion_probability_monte_carlo() {
    let _g = serial();
    let t = Instant::now();
    // item c is held by the first counts[c] users; user MC_USERS-1 holds only
    // a private item so it never contributes to any tested column
    let counts = [1usize, 3, 10, 40, 120];
    let probe = (MC_USERS - 1) as u32;
    let private = counts.len() as u32;
    let rows: Vec<Vec<u32>> = (0..MC_USERS)
        .map(|u| {
            if u as u32 == probe {
                return vec![private];
            }
            (0..counts.len() as u32)
                .filter(|&c| u < counts[c as usize])
                .chain([private])
                .collect()
        })
        .collect();
    let ds = InteractionDataset::from_rows(rows, counts.len() + 1).unwrap();
    let mut hits = [0u64; 5];
    for epoch in 0..MC_EPOCHS {
        let plan = plan_epoch(MC_USERS, MC_BATCH, 808, epoch).unwrap();
        let batch = plan.batches().find(|b| b.contains(&probe)).unwrap();
        let sb = downsample_columns(&gather_batch(&ds, batch).unwrap());
        for (c, h) in hits.iter_mut().enumerate() {
            if sb.local_index(c as u32).is_some() {
                *h += 1;
            }
        }
    }
    let mut worst_z: f64 = 0.0;
    let mut detail = Vec::new();
    for (c, &k) in counts.iter().enumerate() {
        let exact = inclusion_probability_exact(k, MC_USERS, MC_BATCH).unwrap();
        let freq = hits[c] as f64 / MC_EPOCHS as f64;
        let se = (exact * (1.0 - exact) / MC_EPOCHS as f64).sqrt();
        let z = (freq - exact).abs() / se;
        worst_z = worst_z.max(z);
        detail.push(format!("|U_i|={k}: {freq:.4} vs {exact:.4} ({z:.2} SE)"));
    }
    report(
        "8a",
        Some(worst_z <= MC_SIGMAS),
        &format!(
            "{MC_EPOCHS} epochs, |U|={MC_USERS}, m={MC_BATCH}: {} (want <= {MC_SIGMAS} SE), {:.1}s",
            detail.join(", "),
            t.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_08_inclusion_probability_approx_formula() {
    let _g = serial();
    let mut worst = (0.0f64, 0usize, 0usize, 0.0f64, 0.0f64);
    let mut cases = 0;
    for m in [50, 100, 200, 250, 500, 1000] {
        assert!(m >= APPROX_MIN_BATCH);
        let n_batches = APPROX_USERS.div_ceil(m);
        let max_k = (APPROX_MAX_FRACTION * n_batches as f64).floor() as usize;
        for k in 1..=max_k {
            let exact = inclusion_probability_exact(k, APPROX_USERS, m).unwrap();
            let approx = inclusion_probability_approx(k, APPROX_USERS, m);
            let rel = (approx - exact).abs() / exact;
            cases += 1;
            if rel > worst.0 {
                worst = (rel, m, k, approx, exact);
            }
        }
    }
    let (rel, m, k, approx, exact) = worst;
    report(
        "8b",
        Some(rel <= APPROX_REL_TOL),
        &format!(
            "|U|={APPROX_USERS}, {cases} cases with m >= {APPROX_MIN_BATCH}, |U_i| <= 0.2N: worst relative error {:.2}% at m={m}, |U_i|={k} (approximation {approx:.5}, exact {exact:.5}; want <= {:.0}%)",
            100.0 * rel,
            100.0 * APPROX_REL_TOL
        ),
    );
}

/// Recall and NDCG straight from their definitions over a fully sorted list.
fn enumerate_metrics(scores: &[f64], held_out: &[u32], k: usize) -> (Vec<u32>, f64, f64) {
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    order.sort_by(|&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let hits: Vec<bool> = order[..k].iter().map(|i| held_out.contains(i)).collect();
    let recall = hits.iter().filter(|&&h| h).count() as f64 / k.min(held_out.len()) as f64;
    let dcg: f64 = (0..k)
        .filter(|&r| hits[r])
        .map(|r| 1.0 / (r as f64 + 2.0).log2())
        .sum();
    let idcg: f64 = (0..k.min(held_out.len()))
        .map(|r| 1.0 / (r as f64 + 2.0).log2())
        .sum();
    order.truncate(k);
    (order, recall, dcg / idcg)
}

#[test]
fn criterion_09_metric_oracles() {
    let _g = serial();
    let mut r = common::rng(909);
    let mut disagreements = 0;
    let mut out_of_range = 0;
    let mut monotonicity_violations = 0;
    for _ in 0..METRIC_TRIALS {
        let n = r.random_range(2..16);
        // coarse scores so ties are common
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64).collect();
        let k = r.random_range(1..=n);
        let mut items: Vec<u32> = (0..n as u32).collect();
        items.shuffle(&mut r);
        let mut held_out = items[..r.random_range(1..=n)].to_vec();
        held_out.sort_unstable();

        let (order, recall, ndcg) = enumerate_metrics(&scores, &held_out, k);
        let ranked = top_k(&scores, k);
        let got_recall = recall_at_k(&ranked, &held_out, k).unwrap();
        let got_ndcg = ndcg_at_k(&ranked, &held_out, k).unwrap();
        if ranked != order || (got_recall - recall).abs() > 1e-12 || (got_ndcg - ndcg).abs() > 1e-12
        {
            disagreements += 1;
        }
        if ![got_recall, got_ndcg]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
        {
            out_of_range += 1;
        }

        // move one held-out item strictly earlier in the full ranking
        let full = top_k(&scores, n);
        let positions: Vec<usize> = (1..n).filter(|&p| held_out.contains(&full[p])).collect();
        let Some(&from) = positions.get(r.random_range(0..positions.len().max(1))) else {
            continue;
        };
        let to = r.random_range(0..from);
        let mut moved = full.clone();
        let item = moved.remove(from);
        moved.insert(to, item);
        let before = (
            recall_at_k(&full, &held_out, k).unwrap(),
            ndcg_at_k(&full, &held_out, k).unwrap(),
        );
        let after = (
            recall_at_k(&moved, &held_out, k).unwrap(),
            ndcg_at_k(&moved, &held_out, k).unwrap(),
        );
        if after.0 < before.0 || after.1 < before.1 {
            monotonicity_violations += 1;
        }
    }
    report(
        "9",
        Some(disagreements == 0 && out_of_range == 0 && monotonicity_violations == 0),
        &format!(
            "{METRIC_TRIALS} instances: {disagreements} disagree with enumeration, {out_of_range} out of [0,1], {monotonicity_violations} monotonicity violations"
        ),
    );
}

fn sampled_epoch_time(ds: &InteractionDataset, cfg: &TrainConfig) -> Duration {
    let mut params: ModelParams<f32> =
        init_params(ds.num_items(), cfg.hidden_dim, cfg.activation, cfg.seed).unwrap();
    let mut state = AdamState::new(&params, cfg.adam(), cfg.decay_biases);
    (1..=3)
        .map(|epoch| {
            let t = Instant::now();
            train_epoch(ds, &mut params, &mut state, cfg, epoch).unwrap();
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn criterion_10_complexity_scaling() {
    let _g = serial();
    let (users, items) = (5_000, 20_000);
    let base = InteractionDataset::from_rows(
        common::random_rows(users, items, 10.0 / items as f64, 1010),
        items,
    )
    .unwrap();
    let double = InteractionDataset::from_rows(
        common::random_rows(users, items, 20.0 / items as f64, 1011),
        items,
    )
    .unwrap();
    let cfg = TrainConfig {
        hidden_dim: 100,
        ..Default::default()
    };
    let t1 = sampled_epoch_time(&base, &cfg);
    let t2 = sampled_epoch_time(&double, &cfg);
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    report(
        "10",
        Some(ratio <= SCALING_MAX_RATIO),
        &format!(
            "|U|={users}, |I|={items}, m=500: nnz {} -> {} ({:.2}x), epoch {:.3}s -> {:.3}s ({ratio:.2}x, want <= {SCALING_MAX_RATIO}x)",
            base.nnz(),
            double.nnz(),
            double.nnz() as f64 / base.nnz() as f64,
            t1.as_secs_f64(),
            t2.as_secs_f64()
        ),
    );
}
