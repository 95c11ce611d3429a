//! Differential-privacy noise primitives and the private range-count tree.

mod noise;
mod range_tree;

pub use noise::{gaussian, laplace, snap, PrivacyParams, GRID_BITS};
pub use range_tree::{bin_of, bin_value, range_query, DeletionLedger, RangeCountStructure, MAX_BITS};
