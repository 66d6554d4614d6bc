#![allow(dead_code)]

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saecf::dataio::InteractionDataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Users draw roughly `mean_len` distinct items with Zipf-like popularity
/// `1 / (rank + 1)^alpha`.
pub fn zipf_rows(
    users: usize,
    items: usize,
    mean_len: usize,
    alpha: f64,
    seed: u64,
) -> Vec<Vec<u32>> {
    let mut r = rng(seed);
    let weights: Vec<f64> = (0..items)
        .map(|i| 1.0 / ((i + 1) as f64).powf(alpha))
        .collect();
    let dist = WeightedIndex::new(&weights).unwrap();
    let max_len = items.min(2 * mean_len).max(1);
    (0..users)
        .map(|_| {
            let len = r.random_range(1..=max_len);
            let mut row: Vec<u32> = (0..len).map(|_| dist.sample(&mut r) as u32).collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect()
}

pub fn zipf_dataset(users: usize, items: usize, mean_len: usize, seed: u64) -> InteractionDataset {
    InteractionDataset::from_rows(zipf_rows(users, items, mean_len, 0.8, seed), items).unwrap()
}

/// Bernoulli(`density`) cells; every row keeps at least one item.
pub fn random_rows(users: usize, items: usize, density: f64, seed: u64) -> Vec<Vec<u32>> {
    let mut r = rng(seed);
    (0..users)
        .map(|_| {
            let mut row: Vec<u32> = (0..items as u32)
                .filter(|_| r.random_bool(density))
                .collect();
            if row.is_empty() {
                row.push(r.random_range(0..items as u32));
            }
            row
        })
        .collect()
}

/// Users split into `blocks` groups, each group interacting mostly with its
/// own contiguous item range.
pub fn planted_blocks(
    users: usize,
    items: usize,
    blocks: usize,
    per_user: usize,
    seed: u64,
) -> InteractionDataset {
    let mut r = rng(seed);
    let width = items / blocks;
    let rows = (0..users)
        .map(|u| {
            let b = u % blocks;
            let lo = (b * width) as u32;
            let mut row: Vec<u32> = (0..per_user)
                .map(|_| lo + r.random_range(0..width as u32))
                .collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();
    InteractionDataset::from_rows(rows, items).unwrap()
}

/// Writes a MovieLens-style ratings file.
pub fn write_ratings_csv(path: &std::path::Path, rows: &[(u32, u32, f64)]) {
    let mut text = String::from("userId,movieId,rating,timestamp\n");
    for (u, i, r) in rows {
        text.push_str(&format!("{u},{i},{r:.1},1147880044\n"));
    }
    std::fs::write(path, text).unwrap();
}

pub mod grad {
    use saecf::model::{backward, bce_loss_and_grad, forward, ColumnSet, ModelParams, SparseRows};

    fn loss(
        params: &ModelParams<f64>,
        input: &SparseRows<f64>,
        targets: &[u8],
        columns: &ColumnSet,
    ) -> f64 {
        let cache = forward(params, input.clone(), columns.clone()).unwrap();
        bce_loss_and_grad(&cache.logits, targets, input.num_rows())
            .unwrap()
            .0
    }

    fn group_mut(p: &mut ModelParams<f64>, g: usize) -> &mut Vec<f64> {
        match g {
            0 => &mut p.w_enc,
            1 => &mut p.b_enc,
            2 => &mut p.w_dec,
            _ => &mut p.b_dec,
        }
    }

    pub const GROUPS: [&str; 4] = ["W_enc", "b_enc", "W_dec", "b_dec"];

    /// Analytic gradients of every group, densified to parameter shape.
    pub fn analytic(
        params: &ModelParams<f64>,
        input: &SparseRows<f64>,
        targets: &[u8],
        columns: &ColumnSet,
    ) -> [Vec<f64>; 4] {
        let cache = forward(params, input.clone(), columns.clone()).unwrap();
        let (_, dlogits) = bce_loss_and_grad(&cache.logits, targets, input.num_rows()).unwrap();
        let g = backward(params, &cache, &dlogits).unwrap();
        let mut w_enc = vec![0.0; params.w_enc.len()];
        g.dw_enc.scatter_into(&mut w_enc);
        let mut w_dec = vec![0.0; params.w_dec.len()];
        g.dw_dec.scatter_into(&mut w_dec);
        let mut b_dec = vec![0.0; params.b_dec.len()];
        g.db_dec.scatter_into(&mut b_dec);
        [w_enc, g.db_enc, w_dec, b_dec]
    }

    /// Central differences of the batch loss for every parameter.
    pub fn numeric(
        params: &ModelParams<f64>,
        input: &SparseRows<f64>,
        targets: &[u8],
        columns: &ColumnSet,
        h: f64,
    ) -> [Vec<f64>; 4] {
        let mut p = params.clone();
        std::array::from_fn(|g| {
            (0..group_mut(&mut p, g).len())
                .map(|i| {
                    let orig = group_mut(&mut p, g)[i];
                    group_mut(&mut p, g)[i] = orig + h;
                    let up = loss(&p, input, targets, columns);
                    group_mut(&mut p, g)[i] = orig - h;
                    let down = loss(&p, input, targets, columns);
                    group_mut(&mut p, g)[i] = orig;
                    (up - down) / (2.0 * h)
                })
                .collect()
        })
    }

    /// `||a - n|| / max(||a||, ||n||)` per group.
    pub fn relative_errors(a: &[Vec<f64>; 4], n: &[Vec<f64>; 4]) -> [f64; 4] {
        std::array::from_fn(|g| {
            let diff = a[g]
                .iter()
                .zip(&n[g])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            let na = a[g].iter().map(|x| x * x).sum::<f64>().sqrt();
            let nn = n[g].iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = na.max(nn);
            if scale == 0.0 {
                0.0
            } else {
                diff / scale
            }
        })
    }
}
