//! Best-arm identification under correlated random-utility choice models.
//!
//! Arms are indexed from 0. An [`InstanceSpec`] fixes scores, a noise family
//! and a correlation structure; an [`Environment`] plays subsets of it and
//! reports winners. The algorithms in [`algorithms`] only see winners.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod choice;
pub mod correlation;
pub mod error;
pub mod harness;
pub mod instances;

pub use algorithms::{
    blockrank_pb, dueling_elimination, preprocess, rank_aware_seq_pb, seq_pb, AlgoConfig, RunResult,
};
pub use choice::{
    analytic_win_probs, epsilon_bar, ChoiceEnv, Environment, InstanceSpec, NoiseFamily, PacParams,
    ScoreVector,
};
pub use correlation::{BlockPartition, CorrelationMatrix, CorrelationSpec};
pub use error::{Error, Result};
pub use harness::{run_plan, ExperimentPlan, ExperimentResults};
pub use instances::{CatalogRequest, InstanceCatalogEntry};
