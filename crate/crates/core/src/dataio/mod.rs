//! Raw interaction ingestion, filtering, binarisation and user splits.

mod dataset;
mod filter;
pub(crate) mod format;
mod parse;
mod split;

pub use dataset::{InteractionDataset, RawInteractions, RawRecord};
pub use filter::filter_min_counts;
pub use format::{
    load_dataset, load_eval_users, save_dataset, save_eval_users, DATASET_MAGIC, DATASET_VERSION,
};
pub use parse::{parse_ratings_csv, parse_triplets_tsv};
pub use split::{split_by_user, EvalUser, SplitDataset};

/// Builds a binarised dataset from raw records.
///
/// Indices are assigned densely in first-appearance order. Duplicate
/// `(user, item)` pairs collapse into a single interaction.
pub fn build_dataset(raw: &RawInteractions) -> InteractionDataset {
    InteractionDataset::from_raw(raw)
}
