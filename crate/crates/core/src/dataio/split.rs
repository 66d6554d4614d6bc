use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::InteractionDataset;
use crate::error::{Error, Result};
use crate::rng::{self, STREAM_SPLIT};

/// A held-out user: `fold_in` is fed to the encoder, `held_out` is ranked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalUser {
    pub fold_in: Vec<u32>,
    pub held_out: Vec<u32>,
}

impl EvalUser {
    pub fn new(mut fold_in: Vec<u32>, mut held_out: Vec<u32>) -> Result<Self> {
        fold_in.sort_unstable();
        held_out.sort_unstable();
        let user = Self { fold_in, held_out };
        user.validate(usize::MAX)?;
        Ok(user)
    }

    /// Checks sortedness, disjointness, non-emptiness and index range.
    pub fn validate(&self, num_items: usize) -> Result<()> {
        let sorted = |v: &[u32]| v.windows(2).all(|w| w[0] < w[1]);
        if self.fold_in.is_empty() || self.held_out.is_empty() {
            return Err(Error::invalid(
                "eval user needs non-empty fold-in and held-out sets",
            ));
        }
        if !sorted(&self.fold_in) || !sorted(&self.held_out) {
            return Err(Error::invalid(
                "eval user item lists must be strictly increasing",
            ));
        }
        if self
            .fold_in
            .iter()
            .chain(&self.held_out)
            .any(|&i| i as usize >= num_items)
        {
            return Err(Error::invalid(format!(
                "eval user item outside 0..{num_items}"
            )));
        }
        if self
            .held_out
            .iter()
            .any(|i| self.fold_in.binary_search(i).is_ok())
        {
            return Err(Error::invalid("fold-in and held-out sets overlap"));
        }
        Ok(())
    }
}

/// Train dataset plus validation and test users over the train item vocabulary.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: InteractionDataset,
    pub val: Vec<EvalUser>,
    pub test: Vec<EvalUser>,
    /// Index in the source dataset of each kept validation user.
    pub val_sources: Vec<u32>,
    pub test_sources: Vec<u32>,
    /// Val users dropped for having no fold-in or no held-out items.
    pub discarded_val: usize,
    pub discarded_test: usize,
}

fn fold_in_len(ratio: f64, n: usize) -> usize {
    // the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Splits users into train / validation / test.
///
/// `n_val + n_test` users are drawn uniformly at random. The remaining users
/// form the train set, whose items define the vocabulary. Each held-out user
/// keeps only vocabulary items and is split into `floor(fold_in_ratio * n)`
/// random fold-in items and the rest as held-out items.
pub fn split_by_user(
    ds: &InteractionDataset,
    n_val: usize,
    n_test: usize,
    fold_in_ratio: f64,
    seed: u64,
) -> Result<SplitDataset> {
    let n_eval = n_val + n_test;
    if n_eval >= ds.num_users() {
        return Err(Error::invalid(format!(
            "n_val + n_test = {n_eval} must be smaller than the number of users ({})",
            ds.num_users()
        )));
    }
    if !(fold_in_ratio > 0.0 && fold_in_ratio < 1.0) {
        return Err(Error::invalid(format!(
            "fold-in ratio {fold_in_ratio} not in (0, 1)"
        )));
    }

    let mut rng = rng::stream(seed, STREAM_SPLIT, 0);
    let chosen = index::sample(&mut rng, ds.num_users(), n_eval).into_vec();
    let mut is_eval = vec![false; ds.num_users()];
    for &u in &chosen {
        is_eval[u] = true;
    }

    const UNSET: u32 = u32::MAX;
    let mut remap = vec![UNSET; ds.num_items()];
    let mut item_ids = Vec::new();
    let mut user_ids = Vec::new();
    let mut rows = Vec::with_capacity(ds.num_users() - n_eval);
    for u in (0..ds.num_users()).filter(|&u| !is_eval[u]) {
        let row = ds
            .row(u)
            .iter()
            .map(|&i| {
                let slot = &mut remap[i as usize];
                if *slot == UNSET {
                    *slot = item_ids.len() as u32;
                    item_ids.push(ds.item_id(i as usize).to_owned());
                }
                *slot
            })
            .collect();
        rows.push(row);
        user_ids.push(ds.user_id(u).to_owned());
    }
    let train = InteractionDataset::from_rows_with_ids(rows, user_ids, item_ids)?;

    let mut eval_users = |users: &[usize]| {
        let mut kept = Vec::with_capacity(users.len());
        let mut sources = Vec::with_capacity(users.len());
        let mut discarded = 0;
        for &u in users {
            let mut items: Vec<u32> = ds
                .row(u)
                .iter()
                .map(|&i| remap[i as usize])
                .filter(|&i| i != UNSET)
                .collect();
            items.shuffle(&mut rng);
            let n_fold = fold_in_len(fold_in_ratio, items.len());
            if n_fold == 0 || n_fold == items.len() {
                discarded += 1;
                continue;
            }
            let held_out = items.split_off(n_fold);
            items.sort_unstable();
            let mut held_out = held_out;
            held_out.sort_unstable();
            sources.push(u as u32);
            kept.push(EvalUser {
                fold_in: items,
                held_out,
            });
        }
        (kept, sources, discarded)
    };
    let (val, val_sources, discarded_val) = eval_users(&chosen[..n_val]);
    let (test, test_sources, discarded_test) = eval_users(&chosen[n_val..]);
    if discarded_val + discarded_test > 0 {
        log::info!(
            "discarded {discarded_val} validation and {discarded_test} test users without both fold-in and held-out items"
        );
    }
    Ok(SplitDataset {
        train,
        val,
        test,
        val_sources,
        test_sources,
        discarded_val,
        discarded_test,
    })
}
