//! Denoising autoencoders for implicit-feedback collaborative filtering.
//!
//! Training reconstructs, for every mini-batch of users, only the union of
//! the items those users interacted with. Items outside the union are never
//! decoded, so the cost of one pass over the data grows with the number of
//! interactions rather than with `users x items`.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dataio`] parses raw interaction files, filters, binarises and splits
//!   them into compressed sparse row datasets.
//! * [`sampler`] shuffles users into mini-batches and down-samples each batch
//!   to the columns it touches.
//! * [`model`] holds the autoencoder, its forward pass and hand-written
//!   gradients restricted to the sampled columns.
//! * [`optim`] is Adam with coupled L2 decay and lazy row-sparse updates.
//! * [`trainer`] drives epochs, checkpoints and the sampled-vs-full benchmark.
//! * [`eval`] computes Recall@K / NDCG@K under the fold-in protocol.
//! * [`cli`] exposes all of it as the `saecf` binary.

pub mod cli;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
