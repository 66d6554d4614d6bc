//! Ranking metrics and the fold-in evaluation protocol.
//!
//! A held-out user's fold-in items are encoded, every item is scored, the
//! fold-in items are masked out, and the resulting ranking is compared with
//! the user's held-out items.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::EvalUser;
use crate::error::{Error, Result};
use crate::linalg::Scalar;
use crate::model::{predict_scores_batch, ModelParams};

/// Users scored per decoder pass.
const EVAL_CHUNK: usize = 256;

/// Denominator of Recall@K.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RecallNormalization {
    /// `min(K, |held_out|)`, so a perfect ranking always scores 1.
    #[default]
    MinK,
    /// `|held_out|`.
    HeldOut,
}

fn check_args(held_out: &[u32], k: usize) -> Result<()> {
    if held_out.is_empty() {
        return Err(Error::invalid("held-out set is empty"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if held_out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("held-out items must be strictly increasing"));
    }
    Ok(())
}

fn hits<'a>(ranked: &'a [u32], held_out: &'a [u32], k: usize) -> impl Iterator<Item = usize> + 'a {
    ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| held_out.binary_search(i).is_ok())
        .map(|(rank, _)| rank)
}

/// `|top-k ∩ held_out| / min(k, |held_out|)`. `held_out` must be sorted.
pub fn recall_at_k(ranked: &[u32], held_out: &[u32], k: usize) -> Result<f64> {
    recall_at_k_with(ranked, held_out, k, RecallNormalization::MinK)
}

pub fn recall_at_k_with(
    ranked: &[u32],
    held_out: &[u32],
    k: usize,
    norm: RecallNormalization,
) -> Result<f64> {
    check_args(held_out, k)?;
    let denom = match norm {
        RecallNormalization::MinK => k.min(held_out.len()),
        RecallNormalization::HeldOut => held_out.len(),
    };
    Ok(hits(ranked, held_out, k).count() as f64 / denom as f64)
}

/// Binary-relevance NDCG truncated at `k`. `held_out` must be sorted.
pub fn ndcg_at_k(ranked: &[u32], held_out: &[u32], k: usize) -> Result<f64> {
    check_args(held_out, k)?;
    let discount = |rank: usize| 1.0 / ((rank + 2) as f64).log2();
    let dcg: f64 = hits(ranked, held_out, k).map(discount).sum();
    let idcg: f64 = (0..k.min(held_out.len())).map(discount).sum();
    Ok(dcg / idcg)
}

/// Indices of the `k` highest scores, best first; ties go to the lower index.
pub fn top_k<T: Scalar>(scores: &[T], k: usize) -> Vec<u32> {
    let k = k.min(scores.len());
    let cmp = |a: &u32, b: &u32| {
        let (sa, sb) = (scores[*a as usize].as_f64(), scores[*b as usize].as_f64());
        sb.total_cmp(&sa).then(a.cmp(b))
    };
    let mut idx: Vec<u32> = (0..scores.len() as u32).collect();
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Per-user and mean metrics over a set of evaluation users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_users: usize,
    /// Column names of `per_user`, e.g. `recall@20`, `ndcg@100`.
    pub metrics: Vec<String>,
    pub aggregate: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_user: Vec<Vec<f64>>,
}

impl EvalReport {
    pub fn get(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).copied()
    }

    pub fn without_per_user(mut self) -> Self {
        self.per_user.clear();
        self
    }
}

/// Metric names produced for `ks`: every recall@k, then every ndcg@k.
pub fn metric_names(ks: &[usize]) -> Vec<String> {
    let ks = dedup_ks(ks);
    ks.iter()
        .map(|k| format!("recall@{k}"))
        .chain(ks.iter().map(|k| format!("ndcg@{k}")))
        .collect()
}

fn dedup_ks(ks: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for &k in ks {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Metrics of one user given its (at least `max(ks)` long) ranking.
pub fn user_metrics(
    ranked: &[u32],
    held_out: &[u32],
    ks: &[usize],
    norm: RecallNormalization,
) -> Result<Vec<f64>> {
    let ks = dedup_ks(ks);
    let mut out = Vec::with_capacity(2 * ks.len());
    for &k in &ks {
        out.push(recall_at_k_with(ranked, held_out, k, norm)?);
    }
    for &k in &ks {
        out.push(ndcg_at_k(ranked, held_out, k)?);
    }
    Ok(out)
}

pub fn evaluate_split<T: Scalar>(
    params: &ModelParams<T>,
    users: &[EvalUser],
    ks: &[usize],
) -> Result<EvalReport> {
    evaluate_split_with(params, users, ks, RecallNormalization::MinK)
}

/// Fold-in evaluation: rank all items by predicted score (fold-in items
/// masked, ties broken by ascending index) and average the metrics.
pub fn evaluate_split_with<T: Scalar>(
    params: &ModelParams<T>,
    users: &[EvalUser],
    ks: &[usize],
    norm: RecallNormalization,
) -> Result<EvalReport> {
    if users.is_empty() {
        return Err(Error::invalid("no evaluation users"));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("ks must be non-empty and positive"));
    }
    for u in users {
        u.validate(params.num_items())?;
    }
    let max_k = *ks.iter().max().unwrap();
    let n = params.num_items();
    let chunks: Vec<Vec<Vec<f64>>> = users
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| {
            let histories: Vec<&[u32]> = chunk.iter().map(|u| u.fold_in.as_slice()).collect();
            let scores = predict_scores_batch(params, &histories)?;
            chunk
                .iter()
                .enumerate()
                .map(|(r, u)| {
                    let ranked = top_k(&scores[r * n..(r + 1) * n], max_k);
                    user_metrics(&ranked, &u.held_out, ks, norm)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_user: Vec<Vec<f64>> = chunks.into_iter().flatten().collect();
    let metrics = metric_names(ks);
    let aggregate = metrics
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = per_user.iter().map(|row| row[j]).sum::<f64>() / per_user.len() as f64;
            (name.clone(), mean)
        })
        .collect();
    Ok(EvalReport {
        n_users: per_user.len(),
        metrics,
        aggregate,
        per_user,
    })
}
