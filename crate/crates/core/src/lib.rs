//! Exact penalised change-point detection for exponential-family costs.
//!
//! The optimal partitioning recursion `Q_t = min_s {Q_s + c(y_st) + β}` is
//! solved exactly. Candidate last-change indices are discarded either with
//! the PELT rule or with dual-based tests that evaluate a Lagrangian dual of
//! the pruning problem; any dual value is a lower bound, so pruning is safe.

pub mod dual;
pub mod error;
pub mod exp_family;
pub mod segmenter;
pub mod series;
pub mod simgen;
pub mod stat_store;

pub use error::{Error, Result};
pub use exp_family::{ModelFamily, ModelId};
pub use segmenter::{run, Pruning, RunOptions, SegmentationResult};
pub use series::Series;
pub use stat_store::StatStore;
