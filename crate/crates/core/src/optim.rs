//! Adam with coupled L2 weight decay and lazy row-sparse updates.
//!
//! A sparse step only visits the parameter rows present in the gradient slab.
//! Their moments, decay and bias-correction counters advance; every other row
//! and its optimizer state is left bit-for-bit unchanged. This keeps a step
//! proportional to the number of touched rows instead of the item count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Scalar;
use crate::model::{Gradients, ModelParams, RowSlab};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Coupled L2 factor: `weight_decay * param` is added to the gradient.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Optimizer state of one parameter group viewed as `rows x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamGroup<T> {
    rows: usize,
    width: usize,
    pub m1: Vec<T>,
    pub m2: Vec<T>,
    /// Per-row counters, used by sparse steps.
    pub row_steps: Vec<u64>,
    /// Global counter, used by dense steps.
    pub step: u64,
    /// Whether weight decay applies to this group.
    pub decay: bool,
}

impl<T: Scalar> AdamGroup<T> {
    pub fn new(rows: usize, width: usize, decay: bool) -> Self {
        Self {
            rows,
            width,
            m1: vec![T::zero(); rows * width],
            m2: vec![T::zero(); rows * width],
            row_steps: vec![0; rows],
            step: 0,
            decay,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Adam state for the four parameter groups of the autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub hyper: AdamConfig,
    pub w_enc: AdamGroup<T>,
    pub b_enc: AdamGroup<T>,
    pub w_dec: AdamGroup<T>,
    pub b_dec: AdamGroup<T>,
}

impl<T: Scalar> AdamState<T> {
    /// Biases are only decayed when `decay_biases` is set.
    pub fn new(params: &ModelParams<T>, hyper: AdamConfig, decay_biases: bool) -> Self {
        let (n, d) = (params.num_items(), params.hidden_dim());
        Self {
            hyper,
            w_enc: AdamGroup::new(n, d, true),
            b_enc: AdamGroup::new(1, d, decay_biases),
            w_dec: AdamGroup::new(n, d, true),
            b_dec: AdamGroup::new(n, 1, decay_biases),
        }
    }

    /// Lazy update: row-keyed groups only touch their slab rows; `b_enc` is
    /// always dense.
    pub fn step_sparse(&mut self, params: &mut ModelParams<T>, grads: &Gradients<T>) -> Result<()> {
        let hyper = self.hyper;
        adam_step_sparse(&mut params.w_enc, &grads.dw_enc, &mut self.w_enc, &hyper)?;
        adam_step_dense(&mut params.b_enc, &grads.db_enc, &mut self.b_enc, &hyper)?;
        adam_step_sparse(&mut params.w_dec, &grads.dw_dec, &mut self.w_dec, &hyper)?;
        adam_step_sparse(&mut params.b_dec, &grads.db_dec, &mut self.b_dec, &hyper)
    }

    /// Dense update of every parameter; missing slab rows count as zero
    /// gradient. `scratch` is reused between calls.
    pub fn step_dense(
        &mut self,
        params: &mut ModelParams<T>,
        grads: &Gradients<T>,
        scratch: &mut Vec<T>,
    ) -> Result<()> {
        let hyper = self.hyper;
        let n = params.num_items();
        densify(&grads.dw_enc, n, scratch);
        adam_step_dense(&mut params.w_enc, scratch, &mut self.w_enc, &hyper)?;
        adam_step_dense(&mut params.b_enc, &grads.db_enc, &mut self.b_enc, &hyper)?;
        densify(&grads.dw_dec, n, scratch);
        adam_step_dense(&mut params.w_dec, scratch, &mut self.w_dec, &hyper)?;
        densify(&grads.db_dec, n, scratch);
        adam_step_dense(&mut params.b_dec, scratch, &mut self.b_dec, &hyper)
    }
}

fn densify<T: Scalar>(slab: &RowSlab<T>, rows: usize, out: &mut Vec<T>) {
    out.resize(rows * slab.width, T::zero());
    slab.scatter_into(out);
}

struct Coeffs<T> {
    lr: T,
    beta1: T,
    beta2: T,
    one_minus_beta1: T,
    one_minus_beta2: T,
    inv_bc1: T,
    inv_bc2: T,
    eps: T,
    wd: T,
}

impl<T: Scalar> Coeffs<T> {
    fn new(h: &AdamConfig, step: u64, decay: bool) -> Self {
        let t = step.min(i32::MAX as u64) as i32;
        let c = T::from_f64_lossy;
        Self {
            lr: c(h.lr),
            beta1: c(h.beta1),
            beta2: c(h.beta2),
            one_minus_beta1: c(1.0 - h.beta1),
            one_minus_beta2: c(1.0 - h.beta2),
            inv_bc1: c(1.0 / (1.0 - h.beta1.powi(t))),
            inv_bc2: c(1.0 / (1.0 - h.beta2.powi(t))),
            eps: c(h.epsilon),
            wd: if decay { c(h.weight_decay) } else { T::zero() },
        }
    }

    #[inline]
    fn apply(&self, p: &mut [T], g: &[T], m1: &mut [T], m2: &mut [T]) {
        for (((p, &g), m1), m2) in p.iter_mut().zip(g).zip(m1.iter_mut()).zip(m2.iter_mut()) {
            let g = g + self.wd * *p;
            *m1 = self.beta1 * *m1 + self.one_minus_beta1 * g;
            *m2 = self.beta2 * *m2 + self.one_minus_beta2 * g * g;
            let m_hat = *m1 * self.inv_bc1;
            let v_hat = *m2 * self.inv_bc2;
            *p = *p - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

fn check_finite<T: Scalar>(values: &[T], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!(
            "{what} gradient entry {i} is {}",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// One Adam step over every element of a parameter group.
pub fn adam_step_dense<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    group: &mut AdamGroup<T>,
    hyper: &AdamConfig,
) -> Result<()> {
    let n = group.rows * group.width;
    if param.len() != n || grad.len() != n {
        return Err(Error::shape(format!(
            "dense step: param {} / grad {} / state {n}",
            param.len(),
            grad.len()
        )));
    }
    check_finite(grad, "dense")?;
    group.step += 1;
    Coeffs::new(hyper, group.step, group.decay).apply(param, grad, &mut group.m1, &mut group.m2);
    Ok(())
}

/// One Adam step restricted to the rows keyed in `slab`, each with its own
/// bias-correction counter.
pub fn adam_step_sparse<T: Scalar>(
    param: &mut [T],
    slab: &RowSlab<T>,
    group: &mut AdamGroup<T>,
    hyper: &AdamConfig,
) -> Result<()> {
    let w = group.width;
    if param.len() != group.rows * w || slab.width != w || slab.values.len() != slab.keys.len() * w
    {
        return Err(Error::shape(
            "sparse step: slab does not match parameter group",
        ));
    }
    if slab.keys.windows(2).any(|k| k[0] >= k[1]) {
        return Err(Error::invalid(
            "gradient slab has duplicate or unsorted keys",
        ));
    }
    if slab.keys.last().is_some_and(|&k| k as usize >= group.rows) {
        return Err(Error::invalid("gradient slab key out of range"));
    }
    check_finite(&slab.values, "sparse")?;
    for (i, &k) in slab.keys.iter().enumerate() {
        let k = k as usize;
        group.row_steps[k] += 1;
        let span = k * w..(k + 1) * w;
        Coeffs::new(hyper, group.row_steps[k], group.decay).apply(
            &mut param[span.clone()],
            slab.row(i),
            &mut group.m1[span.clone()],
            &mut group.m2[span],
        );
    }
    Ok(())
}
