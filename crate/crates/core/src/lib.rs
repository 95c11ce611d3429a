//! Deletion attacks against stateful curators, undeleted-safe security games,
//! and the mechanisms that pass or fail them.


pub mod attacks;
pub mod dataset;
pub mod dp;
pub mod error;
pub mod games;

pub mod mechanism;
pub mod mechanisms;
pub mod queries;


pub mod release;
pub mod rng;

pub use dataset::{exact_median, rank_error, DeletionRequest, Elem, Element, Multiset, Point};
pub use error::{Error, Result};
pub use mechanism::{Curator, Mechanism, MechanismId, UpdateRule};
pub use release::{MechanismTranscript, PublicState, Release, Step};
