//! Best-arm identification from winner feedback.
//!
//! [`blockrank_pb`] screens every triple to keep at most one arm per block,
//! then runs the sequential group tournament [`seq_pb`] on the survivors.
//! [`rank_aware_seq_pb`] sizes its rounds by a known block rank instead of
//! the group size, and [`dueling_elimination`] is the pairwise baseline.

mod dueling;
mod preprocess;
mod reduction;
mod seqpb;
mod transcript;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dueling::{duel_plays, dueling_elimination};
pub use preprocess::{preprocess, preprocess_plays_per_triple, PreprocessReport};
pub use reduction::{reduction_adapter, reduction_instance, LiftedEnvironment};
pub use seqpb::{blockrank_pb, rank_aware_seq_pb, seq_pb, ScheduleRound, SeqPbSchedule};
pub use transcript::{cluster_win_counts, PlayRecord, Recorder};

/// Tuning constants shared by all algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoConfig {
    /// Advantage-ratio sensitivity constant of the noise family.
    pub c: f64,
    /// Multiplier on `ln(4 n^3 / delta)` in the plays per triple.
    pub preprocess_const: f64,
    /// Multiplier on the round budgets of the tournament and duels.
    pub seqpb_const: f64,
    /// Geometric ratio of the per-round accuracies.
    pub epsilon_decay: f64,
    /// Geometric ratio of the per-round confidences.
    pub delta_decay: f64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            c: 0.1,
            preprocess_const: 2e4,
            seqpb_const: 1.0,
            epsilon_decay: 0.75,
            delta_decay: 0.5,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 0.5) {
            return Err(Error::config(format!(
                "c = {} must lie in (0, 1/2)",
                self.c
            )));
        }
        if !(self.preprocess_const > 0.0 && self.preprocess_const.is_finite()) {
            return Err(Error::config("preprocess_const must be positive"));
        }
        if !(self.seqpb_const > 0.0 && self.seqpb_const.is_finite()) {
            return Err(Error::config("seqpb_const must be positive"));
        }
        for (name, v) in [
            ("epsilon_decay", self.epsilon_decay),
            ("delta_decay", self.delta_decay),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// Accuracy of round `round` (1-based); the series sums to `epsilon`.
    pub fn round_epsilon(&self, epsilon: f64, round: u32) -> f64 {
        let q = self.epsilon_decay;
        epsilon * (1.0 - q) / q * q.powi(round as i32)
    }

    /// Confidence of round `round` (1-based); the series sums to `delta`.
    pub fn round_delta(&self, delta: f64, round: u32) -> f64 {
        let q = self.delta_decay;
        delta * (1.0 - q) / q * q.powi(round as i32)
    }
}

/// Plays and survivors of one stage of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub name: String,
    pub plays: u64,
    pub survivors: usize,
}

/// Outcome of one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub recommended: usize,
    /// Total subset plays; equals the environment's query-count delta.
    pub samples: u64,
    pub phases: Vec<PhaseSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<SeqPbSchedule>,
    /// Filled in by the harness when the ground truth is known.
    #[serde(default)]
    pub succeeded: Option<bool>,
}

impl RunResult {
    pub fn phase_plays(&self, name: &str) -> u64 {
        self.phases
            .iter()
            .filter(|p| p.name == name)
            .map(|p| p.plays)
            .sum()
    }
}
