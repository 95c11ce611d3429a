//! Curator algorithms: perfect-retraining baselines, the private batch-query
//! solver, stateless private mechanisms, and the pathological XOR curators.

mod bq;
mod countmod;
mod dp_sum;
mod kmeans;
mod median;
mod sq;
mod xor;

pub use bq::{bq_one_shot, BqParams, BqRetrainer};
pub use countmod::{countmod, CountModRetrainer};
pub use dp_sum::{DpSum, DpSumRule};
pub use kmeans::{lloyd_2means_1d, KMeansRetrainer, KMeansState};
pub use median::{DpMedian, DpMedianRule, ExactMedianRetrainer, NaiveMedian, NaiveMedianRule};
pub use sq::{PostProcess, Predicate, SqMechanism, SqRule};
pub use xor::{XorDeleted, XorRule, XorUndeleted};

use crate::error::{Error, Result};

fn live<T>(state: &mut Option<T>) -> Result<&mut T> {
    state.as_mut().ok_or(Error::NotInitialized)
}
