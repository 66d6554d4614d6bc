//! Mini-batch construction with column down-sampling.
//!
//! Each epoch the users are shuffled and cut into `N = ceil(|U| / m)`
//! consecutive batches. A batch is gathered as a coordinate list and then
//! restricted to the union of the items its users interacted with; those
//! columns are the only outputs the model reconstructs for the batch, so the
//! zero cells inside the union act as negative samples.

use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::dataio::InteractionDataset;
use crate::error::{Error, Result};
use crate::rng::{self, STREAM_SHUFFLE};

/// A shuffled visiting order over all users for one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPlan {
    permutation: Vec<u32>,
    batch_size: usize,
}

impl EpochPlan {
    pub fn permutation(&self) -> &[u32] {
        &self.permutation
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn num_batches(&self) -> usize {
        self.permutation.len().div_ceil(self.batch_size)
    }

    /// Consecutive chunks of `batch_size` users; the last may be shorter.
    pub fn batches(&self) -> std::slice::Chunks<'_, u32> {
        self.permutation.chunks(self.batch_size)
    }
}

/// Shuffles `0..num_users` deterministically from `(seed, epoch)`.
pub fn plan_epoch(num_users: usize, batch_size: usize, seed: u64, epoch: u64) -> Result<EpochPlan> {
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let mut permutation: Vec<u32> = (0..num_users as u32).collect();
    permutation.shuffle(&mut rng::stream(seed, STREAM_SHUFFLE, epoch));
    Ok(EpochPlan {
        permutation,
        batch_size,
    })
}

/// The users of one batch as a coordinate list of `(local_row, global_col)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseBatch {
    pub user_rows: Vec<u32>,
    pub entries: Vec<(u32, u32)>,
}

impl SparseBatch {
    pub fn num_rows(&self) -> usize {
        self.user_rows.len()
    }
}

pub fn gather_batch(ds: &InteractionDataset, users: &[u32]) -> Result<SparseBatch> {
    let mut entries = Vec::with_capacity(users.iter().map(|&u| row_len(ds, u)).sum());
    for (local, &u) in users.iter().enumerate() {
        if u as usize >= ds.num_users() {
            return Err(Error::invalid(format!(
                "user index {u} out of range (0..{})",
                ds.num_users()
            )));
        }
        entries.extend(ds.row(u as usize).iter().map(|&c| (local as u32, c)));
    }
    Ok(SparseBatch {
        user_rows: users.to_vec(),
        entries,
    })
}

fn row_len(ds: &InteractionDataset, u: u32) -> usize {
    if (u as usize) < ds.num_users() {
        ds.row(u as usize).len()
    } else {
        0
    }
}

/// A batch restricted to a column set, stored as local-index CSR.
///
/// `columns` is shared between a batch and the slices cut from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledBatch {
    columns: Arc<[u32]>,
    row_offsets: Vec<usize>,
    local_cols: Vec<u32>,
}

impl SampledBatch {
    pub fn columns(&self) -> &Arc<[u32]> {
        &self.columns
    }

    /// `s`, the number of sampled columns.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.local_cols.len()
    }

    /// Local column indices of the non-zeros in row `r`, ascending.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.local_cols[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    /// Maps a global item index to its local column, if sampled.
    pub fn local_index(&self, global: u32) -> Option<usize> {
        self.columns.binary_search(&global).ok()
    }

    /// The dense `rows x s` {0,1} matrix, row-major.
    pub fn dense(&self) -> Vec<u8> {
        let s = self.width();
        let mut out = vec![0u8; self.num_rows() * s];
        for r in 0..self.num_rows() {
            for &c in self.row(r) {
                out[r * s + c as usize] = 1;
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&(c as u32)).is_ok()
    }

    fn from_rows(
        columns: Arc<[u32]>,
        num_rows: usize,
        entries: impl Iterator<Item = (u32, u32)>,
    ) -> Self {
        let mut per_row: Vec<Vec<u32>> = vec![Vec::new(); num_rows];
        for (r, c) in entries {
            per_row[r as usize].push(c);
        }
        let mut row_offsets = Vec::with_capacity(num_rows + 1);
        row_offsets.push(0);
        let mut local_cols = Vec::new();
        for mut row in per_row {
            row.sort_unstable();
            row.dedup();
            local_cols.extend_from_slice(&row);
            row_offsets.push(local_cols.len());
        }
        Self {
            columns,
            row_offsets,
            local_cols,
        }
    }
}

/// Restricts a batch to the sorted union of its non-zero columns.
pub fn downsample_columns(b: &SparseBatch) -> SampledBatch {
    let mut columns: Vec<u32> = b.entries.iter().map(|&(_, c)| c).collect();
    columns.sort_unstable();
    columns.dedup();
    let local = b.entries.iter().map(|&(r, c)| {
        let l = columns.binary_search(&c).expect("column collected above");
        (r, l as u32)
    });
    let local: Vec<_> = local.collect();
    SampledBatch::from_rows(columns.into(), b.num_rows(), local.into_iter())
}

/// Keeps every item column; the reference full-output layout.
pub fn all_columns(b: &SparseBatch, num_items: usize) -> SampledBatch {
    let columns: Arc<[u32]> = (0..num_items as u32).collect();
    SampledBatch::from_rows(columns, b.num_rows(), b.entries.iter().copied())
}

/// Cuts a sampled batch into row slices of at most `slice_rows` rows. Every
/// slice shares the parent's column list.
pub fn slice_batch(sb: &SampledBatch, slice_rows: usize) -> Result<Vec<SampledBatch>> {
    if slice_rows == 0 {
        return Err(Error::invalid("slice_rows must be at least 1"));
    }
    let rows = sb.num_rows();
    if rows <= slice_rows {
        return Ok(vec![sb.clone()]);
    }
    let mut out = Vec::with_capacity(rows.div_ceil(slice_rows));
    let mut start = 0;
    while start < rows {
        let end = (start + slice_rows).min(rows);
        let (lo, hi) = (sb.row_offsets[start], sb.row_offsets[end]);
        out.push(SampledBatch {
            columns: Arc::clone(&sb.columns),
            row_offsets: sb.row_offsets[start..=end].iter().map(|o| o - lo).collect(),
            local_cols: sb.local_cols[lo..hi].to_vec(),
        });
        start = end;
    }
    Ok(out)
}

/// First-order estimate `min(|U_i| / N, 1)` with `N = ceil(|U| / m)` of the
/// chance that a non-interacted item lands in a user's batch union.
pub fn inclusion_probability_approx(count_ui: usize, num_users: usize, m: usize) -> f64 {
    assert!(m >= 1 && num_users >= 1);
    let n = num_users.div_ceil(m);
    (count_ui as f64 / n as f64).min(1.0)
}

/// Exact probability that a full batch of `m` users holding a fixed user
/// outside `U_i` also holds at least one user of `U_i`:
/// `1 - C(|U|-1-|U_i|, m-1) / C(|U|-1, m-1)`.
///
/// The binomial ratio is evaluated as the telescoped product
/// `prod_{j<|U_i|} (|U|-m-j) / (|U|-1-j)`, which avoids huge intermediates.
pub fn inclusion_probability_exact(count_ui: usize, num_users: usize, m: usize) -> Result<f64> {
    if m == 0 || m > num_users {
        return Err(Error::invalid(format!(
            "batch size {m} not in 1..={num_users}"
        )));
    }
    if count_ui > num_users - 1 {
        return Err(Error::invalid(format!(
            "|U_i| = {count_ui} exceeds the {} other users",
            num_users - 1
        )));
    }
    let mut none = 1.0f64;
    for j in 0..count_ui {
        let num = (num_users - m) as f64 - j as f64;
        if num <= 0.0 {
            none = 0.0;
            break;
        }
        none *= num / ((num_users - 1 - j) as f64);
    }
    Ok(1.0 - none)
}
