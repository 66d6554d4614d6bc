//! One-hidden-layer autoencoder with a logistic output layer.
//!
//! The encoder maps a (dropout-corrupted) binary interaction vector to a
//! hidden code, `z = act(W_enc x + b_enc)`, and the decoder produces one
//! logit per item, `l = W_dec z + b_dec`. Training only ever reads and writes
//! the rows of `W_enc`, `W_dec` and `b_dec` that belong to the batch's
//! sampled columns.
//!
//! Both weight matrices are stored item-major (`num_items x hidden_dim`), so
//! the parameters of one item are a contiguous row. The checkpoint format
//! writes `W_enc` as the conventional `hidden_dim x num_items` matrix.

mod checkpoint;

use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, gemm_nn, gemm_nt, gemm_tn, Scalar};
use crate::rng::{self, STREAM_INIT};
use crate::sampler::SampledBatch;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};

/// Hidden-layer non-linearity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `h`.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, h: T) -> T {
        match self {
            Activation::Tanh => T::one() - h * h,
            Activation::Sigmoid => h * (T::one() - h),
            Activation::Relu => {
                if h > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Encoder and decoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    num_items: usize,
    hidden_dim: usize,
    pub activation: Activation,
    /// `num_items x hidden_dim`; row `i` is the encoder column of item `i`.
    pub w_enc: Vec<T>,
    pub b_enc: Vec<T>,
    /// `num_items x hidden_dim`.
    pub w_dec: Vec<T>,
    pub b_dec: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// All-zero parameters.
    pub fn zeros(num_items: usize, hidden_dim: usize, activation: Activation) -> Self {
        Self {
            num_items,
            hidden_dim,
            activation,
            w_enc: vec![T::zero(); num_items * hidden_dim],
            b_enc: vec![T::zero(); hidden_dim],
            w_dec: vec![T::zero(); num_items * hidden_dim],
            b_dec: vec![T::zero(); num_items],
        }
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn enc_row(&self, item: usize) -> &[T] {
        let d = self.hidden_dim;
        &self.w_enc[item * d..(item + 1) * d]
    }

    pub fn dec_row(&self, item: usize) -> &[T] {
        let d = self.hidden_dim;
        &self.w_dec[item * d..(item + 1) * d]
    }

    pub fn all_finite(&self) -> bool {
        [&self.w_enc, &self.b_enc, &self.w_dec, &self.b_dec]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Converts to another scalar type (e.g. f32 training params to f64).
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::from_f64_lossy(x.as_f64())).collect();
        ModelParams {
            num_items: self.num_items,
            hidden_dim: self.hidden_dim,
            activation: self.activation,
            w_enc: conv(&self.w_enc),
            b_enc: conv(&self.b_enc),
            w_dec: conv(&self.w_dec),
            b_dec: conv(&self.b_dec),
        }
    }

    pub(crate) fn from_parts(
        num_items: usize,
        hidden_dim: usize,
        activation: Activation,
        w_enc: Vec<T>,
        b_enc: Vec<T>,
        w_dec: Vec<T>,
        b_dec: Vec<T>,
    ) -> Result<Self> {
        let p = Self {
            num_items,
            hidden_dim,
            activation,
            w_enc,
            b_enc,
            w_dec,
            b_dec,
        };
        let d = hidden_dim;
        if p.w_enc.len() != num_items * d
            || p.w_dec.len() != num_items * d
            || p.b_enc.len() != d
            || p.b_dec.len() != num_items
        {
            return Err(Error::shape(
                "parameter arrays inconsistent with dimensions",
            ));
        }
        Ok(p)
    }
}

/// Glorot-uniform weights in `(-a, a)` with `a = sqrt(6 / (num_items + d))`,
/// zero biases. Values are drawn in f64 so f32 and f64 models initialised
/// from the same seed agree up to rounding.
pub fn init_params<T: Scalar>(
    num_items: usize,
    hidden_dim: usize,
    activation: Activation,
    seed: u64,
) -> Result<ModelParams<T>> {
    if hidden_dim == 0 {
        return Err(Error::invalid("hidden dimension must be at least 1"));
    }
    let bound = (6.0 / (num_items + hidden_dim) as f64).sqrt();
    let mut p = ModelParams::zeros(num_items, hidden_dim, activation);
    let fill = |v: &mut [T], stream: u64| {
        let mut rng = rng::stream(seed, STREAM_INIT, stream);
        for x in v {
            *x = T::from_f64_lossy(rng.random_range(-bound..bound));
        }
    };
    fill(&mut p.w_enc, 0);
    fill(&mut p.w_dec, 1);
    Ok(p)
}

/// Which output columns a pass covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSet {
    /// Strictly increasing global item indices.
    Subset(Arc<[u32]>),
    /// Every item, in index order.
    All,
}

impl ColumnSet {
    pub fn subset(columns: impl Into<Arc<[u32]>>) -> Self {
        ColumnSet::Subset(columns.into())
    }

    pub fn len(&self, num_items: usize) -> usize {
        match self {
            ColumnSet::Subset(c) => c.len(),
            ColumnSet::All => num_items,
        }
    }

    pub fn is_empty(&self, num_items: usize) -> bool {
        self.len(num_items) == 0
    }

    #[inline]
    pub fn global(&self, local: usize) -> usize {
        match self {
            ColumnSet::Subset(c) => c[local] as usize,
            ColumnSet::All => local,
        }
    }

    fn validate(&self, num_items: usize) -> Result<()> {
        if let ColumnSet::Subset(c) = self {
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("column list must be strictly increasing"));
            }
            if c.last().is_some_and(|&l| l as usize >= num_items) {
                return Err(Error::shape(format!(
                    "column index beyond {num_items} items"
                )));
            }
        }
        Ok(())
    }
}

/// Row-sparse real matrix: the (corrupted) encoder input of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows<T> {
    width: usize,
    row_offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseRows<T> {
    fn with_capacity(width: usize, rows: usize, nnz: usize) -> Self {
        let mut row_offsets = Vec::with_capacity(rows + 1);
        row_offsets.push(0);
        Self {
            width,
            row_offsets,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    fn push(&mut self, col: u32, val: T) {
        self.cols.push(col);
        self.vals.push(val);
    }

    fn end_row(&mut self) {
        self.row_offsets.push(self.cols.len());
    }

    /// The clean {0,1} input of a sampled batch.
    pub fn from_batch(sb: &SampledBatch) -> Self {
        let mut out = Self::with_capacity(sb.width(), sb.num_rows(), sb.nnz());
        for r in 0..sb.num_rows() {
            for &c in sb.row(r) {
                out.push(c, T::one());
            }
            out.end_row();
        }
        out
    }

    /// Keeps the non-zeros of a row-major dense matrix.
    pub fn from_dense(dense: &[T], rows: usize, width: usize) -> Result<Self> {
        if dense.len() != rows * width {
            return Err(Error::shape(format!(
                "{} values for a {rows}x{width} matrix",
                dense.len()
            )));
        }
        let mut out = Self::with_capacity(width, rows, 0);
        for r in 0..rows {
            for (c, &v) in dense[r * width..(r + 1) * width].iter().enumerate() {
                if v != T::zero() {
                    out.push(c as u32, v);
                }
            }
            out.end_row();
        }
        Ok(out)
    }

    /// Binary rows over global item indices (e.g. fold-in histories).
    pub fn from_item_lists(lists: &[&[u32]], num_items: usize) -> Result<Self> {
        let nnz = lists.iter().map(|l| l.len()).sum();
        let mut out = Self::with_capacity(num_items, lists.len(), nnz);
        for list in lists {
            for &i in *list {
                if i as usize >= num_items {
                    return Err(Error::invalid(format!("item {i} outside 0..{num_items}")));
                }
                out.push(i, T::one());
            }
            out.end_row();
        }
        Ok(out)
    }

    pub fn num_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_rows() * self.width];
        for r in 0..self.num_rows() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r * self.width + c as usize] = v;
            }
        }
        out
    }
}

/// Inverted input dropout: each non-zero survives with probability `1 - p`
/// and is scaled by `1 / (1 - p)`. Zero cells are never touched.
pub fn apply_input_dropout<T: Scalar, R: RngCore + ?Sized>(
    sb: &SampledBatch,
    p: f64,
    rng: &mut R,
) -> Result<SparseRows<T>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "dropout probability {p} not in [0, 1)"
        )));
    }
    if p == 0.0 {
        return Ok(SparseRows::from_batch(sb));
    }
    let keep_value = T::from_f64_lossy(1.0 / (1.0 - p));
    let mut out = SparseRows::with_capacity(sb.width(), sb.num_rows(), sb.nnz());
    for r in 0..sb.num_rows() {
        for &c in sb.row(r) {
            if rng.random::<f64>() >= p {
                out.push(c, keep_value);
            }
        }
        out.end_row();
    }
    Ok(out)
}

/// `hidden[r] = act(sum_c input[r][c] * W_enc[:, columns[c]] + b_enc)`.
///
/// Only the encoder rows of the referenced columns are read, and only where
/// the input is non-zero.
pub fn encode<T: Scalar>(
    params: &ModelParams<T>,
    input: &SparseRows<T>,
    columns: &ColumnSet,
) -> Result<Vec<T>> {
    columns.validate(params.num_items)?;
    if input.width() != columns.len(params.num_items) {
        return Err(Error::shape(format!(
            "input width {} but {} columns",
            input.width(),
            columns.len(params.num_items)
        )));
    }
    let d = params.hidden_dim;
    let mut hidden = Vec::with_capacity(input.num_rows() * d);
    for r in 0..input.num_rows() {
        let start = hidden.len();
        hidden.extend_from_slice(&params.b_enc);
        let h = &mut hidden[start..];
        let (cols, vals) = input.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            axpy(v, params.enc_row(columns.global(c as usize)), h);
        }
        for x in h.iter_mut() {
            *x = params.activation.apply(*x);
        }
    }
    Ok(hidden)
}

fn gather_dec_rows<T: Scalar>(params: &ModelParams<T>, columns: &[u32]) -> Vec<T> {
    let mut out = Vec::with_capacity(columns.len() * params.hidden_dim);
    for &c in columns {
        out.extend_from_slice(params.dec_row(c as usize));
    }
    out
}

/// `logits[r][c] = hidden[r] . W_dec[columns[c]] + b_dec[columns[c]]`.
pub fn decode<T: Scalar>(
    params: &ModelParams<T>,
    hidden: &[T],
    rows: usize,
    columns: &ColumnSet,
) -> Result<Vec<T>> {
    columns.validate(params.num_items)?;
    let d = params.hidden_dim;
    if hidden.len() != rows * d {
        return Err(Error::shape(format!(
            "hidden has {} values, expected {rows}x{d}",
            hidden.len()
        )));
    }
    let s = columns.len(params.num_items);
    let mut logits = Vec::with_capacity(rows * s);
    match columns {
        ColumnSet::Subset(cols) => {
            for _ in 0..rows {
                logits.extend(cols.iter().map(|&c| params.b_dec[c as usize]));
            }
            let w = gather_dec_rows(params, cols);
            gemm_nt(hidden, &w, &mut logits, rows, d, s, T::one());
        }
        ColumnSet::All => {
            for _ in 0..rows {
                logits.extend_from_slice(&params.b_dec);
            }
            gemm_nt(hidden, &params.w_dec, &mut logits, rows, d, s, T::one());
        }
    }
    Ok(logits)
}

/// Everything the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub dropped_input: SparseRows<T>,
    pub hidden: Vec<T>,
    pub logits: Vec<T>,
    pub columns: ColumnSet,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn num_rows(&self) -> usize {
        self.dropped_input.num_rows()
    }
}

pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    input: SparseRows<T>,
    columns: ColumnSet,
) -> Result<ForwardCache<T>> {
    let hidden = encode(params, &input, &columns)?;
    let logits = decode(params, &hidden, input.num_rows(), &columns)?;
    Ok(ForwardCache {
        dropped_input: input,
        hidden,
        logits,
        columns,
    })
}

/// Logistic negative log-likelihood, summed over columns and averaged over
/// rows, with its gradient `(sigmoid(l) - x) / rows`.
///
/// Uses `max(l, 0) - l x + log(1 + exp(-|l|))`, which is finite for every
/// finite logit.
pub fn bce_loss_and_grad<T: Scalar>(
    logits: &[T],
    targets: &[u8],
    rows: usize,
) -> Result<(f64, Vec<T>)> {
    if logits.len() != targets.len() {
        return Err(Error::shape(format!(
            "{} logits but {} targets",
            logits.len(),
            targets.len()
        )));
    }
    if rows == 0 {
        return Ok((0.0, Vec::new()));
    }
    let inv_rows = T::one() / T::from_usize(rows).unwrap();
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (&l, &x) in logits.iter().zip(targets) {
        let xt = if x != 0 { T::one() } else { T::zero() };
        let entry = l.max(T::zero()) - l * xt + (-l.abs()).exp().ln_1p();
        total += entry.as_f64();
        grad.push((sigmoid(l) - xt) * inv_rows);
    }
    Ok((total / rows as f64, grad))
}

/// Gradient rows keyed by strictly increasing parameter-row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSlab<T> {
    pub keys: Vec<u32>,
    pub width: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> RowSlab<T> {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn get(&self, key: u32) -> Option<&[T]> {
        self.keys.binary_search(&key).ok().map(|i| self.row(i))
    }

    /// Writes the slab into a dense zeroed `rows x width` buffer.
    pub fn scatter_into(&self, dense: &mut [T]) {
        dense.iter_mut().for_each(|x| *x = T::zero());
        for (i, &k) in self.keys.iter().enumerate() {
            let k = k as usize;
            dense[k * self.width..(k + 1) * self.width].copy_from_slice(self.row(i));
        }
    }
}

/// Parameter gradients of one batch. Row-keyed groups only contain rows the
/// batch actually touched.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub dw_enc: RowSlab<T>,
    pub db_enc: Vec<T>,
    pub dw_dec: RowSlab<T>,
    pub db_dec: RowSlab<T>,
}

pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    dlogits: &[T],
) -> Result<Gradients<T>> {
    let rows = cache.num_rows();
    let d = params.hidden_dim;
    let s = cache.columns.len(params.num_items);
    if cache.hidden.len() != rows * d
        || cache.logits.len() != rows * s
        || cache.dropped_input.width() != s
    {
        return Err(Error::shape("forward cache does not match the parameters"));
    }
    if dlogits.len() != rows * s {
        return Err(Error::shape(format!(
            "dlogits has {} values, expected {rows}x{s}",
            dlogits.len()
        )));
    }

    let keys: Vec<u32> = match &cache.columns {
        ColumnSet::Subset(c) => c.to_vec(),
        ColumnSet::All => (0..s as u32).collect(),
    };

    let mut dw_dec = vec![T::zero(); s * d];
    gemm_tn(dlogits, &cache.hidden, &mut dw_dec, s, rows, d, T::zero());
    let mut db_dec = vec![T::zero(); s];
    for r in 0..rows {
        for (acc, &g) in db_dec.iter_mut().zip(&dlogits[r * s..(r + 1) * s]) {
            *acc = *acc + g;
        }
    }

    let mut dpre = vec![T::zero(); rows * d];
    match &cache.columns {
        ColumnSet::Subset(c) => {
            let w = gather_dec_rows(params, c);
            gemm_nn(dlogits, &w, &mut dpre, rows, s, d, T::zero());
        }
        ColumnSet::All => gemm_nn(dlogits, &params.w_dec, &mut dpre, rows, s, d, T::zero()),
    }
    for (g, &h) in dpre.iter_mut().zip(&cache.hidden) {
        *g = *g * params.activation.derivative_from_output(h);
    }
    let mut db_enc = vec![T::zero(); d];
    for r in 0..rows {
        axpy(T::one(), &dpre[r * d..(r + 1) * d], &mut db_enc);
    }

    // encoder rows: only columns with a non-zero (post-dropout) input
    const UNSET: usize = usize::MAX;
    let input = &cache.dropped_input;
    let mut slot = vec![UNSET; s];
    for &c in &input.cols {
        slot[c as usize] = 0;
    }
    let mut enc_keys = Vec::new();
    for (local, sl) in slot.iter_mut().enumerate() {
        if *sl != UNSET {
            *sl = enc_keys.len();
            enc_keys.push(cache.columns.global(local) as u32);
        }
    }
    let mut dw_enc = vec![T::zero(); enc_keys.len() * d];
    for r in 0..rows {
        let g = &dpre[r * d..(r + 1) * d];
        let (cols, vals) = input.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            let k = slot[c as usize];
            axpy(v, g, &mut dw_enc[k * d..(k + 1) * d]);
        }
    }

    Ok(Gradients {
        dw_enc: RowSlab {
            keys: enc_keys,
            width: d,
            values: dw_enc,
        },
        db_enc,
        dw_dec: RowSlab {
            keys: keys.clone(),
            width: d,
            values: dw_dec,
        },
        db_dec: RowSlab {
            keys,
            width: 1,
            values: db_dec,
        },
    })
}

/// Scores every item for a batch of fold-in histories (`rows x num_items`),
/// with each row's own history masked to negative infinity.
pub fn predict_scores_batch<T: Scalar>(
    params: &ModelParams<T>,
    fold_ins: &[&[u32]],
) -> Result<Vec<T>> {
    if fold_ins.iter().any(|f| f.is_empty()) {
        return Err(Error::invalid("fold-in history is empty"));
    }
    let input = SparseRows::from_item_lists(fold_ins, params.num_items)?;
    let hidden = encode(params, &input, &ColumnSet::All)?;
    let mut scores = decode(params, &hidden, fold_ins.len(), &ColumnSet::All)?;
    let n = params.num_items;
    for (r, items) in fold_ins.iter().enumerate() {
        for &i in *items {
            scores[r * n + i as usize] = T::neg_infinity();
        }
    }
    Ok(scores)
}

/// Scores every item for one user's fold-in history; history items get `-inf`.
pub fn predict_scores<T: Scalar>(params: &ModelParams<T>, fold_in: &[u32]) -> Result<Vec<T>> {
    predict_scores_batch(params, &[fold_in])
}
