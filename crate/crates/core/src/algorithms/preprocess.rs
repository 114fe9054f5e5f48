use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::choice::ChoiceEnv;
use crate::correlation::BlockPartition;
use crate::error::{Error, Result};

use super::AlgoConfig;

/// Result of the triple screening phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub flags: Vec<bool>,
    /// Win counts of each member, keyed by the sorted triple.
    pub triple_counts: BTreeMap<[usize; 3], [u64; 3]>,
    /// Unflagged arms in increasing order.
    pub survivors: Vec<usize>,
    pub plays_used: u64,
    pub t_per_triple: u64,
}

impl PreprocessReport {
    /// Whether the survivors contain `best` and at most one arm per block.
    pub fn satisfies_block_guarantee(&self, best: usize, partition: &BlockPartition) -> bool {
        if !self.survivors.contains(&best) {
            return false;
        }
        let mut per_block = vec![0usize; partition.num_blocks()];
        for &arm in &self.survivors {
            per_block[partition.block_of(arm)] += 1;
        }
        per_block.iter().all(|&c| c <= 1)
    }
}

/// `ceil(preprocess_const * ln(4 n^3 / delta))`.
pub fn preprocess_plays_per_triple(n: usize, delta: f64, cfg: &AlgoConfig) -> u64 {
    let n = n as f64;
    (cfg.preprocess_const * (4.0 * n * n * n / delta).ln()).ceil() as u64
}

/// Plays every triple of `0..n` a fixed number of times and flags any arm
/// that wins at most 26% of the plays of some triple containing it.
///
/// With fewer than three arms there are no triples and every arm survives.
pub fn preprocess<E: ChoiceEnv + ?Sized>(
    env: &mut E,
    n: usize,
    delta: f64,
    cfg: &AlgoConfig,
) -> Result<PreprocessReport> {
    cfg.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if n > env.num_arms() {
        return Err(Error::domain(format!(
            "asked to screen {n} arms of a {}-arm environment",
            env.num_arms()
        )));
    }
    let mut flags = vec![false; n];
    let mut triple_counts = BTreeMap::new();
    if n < 3 {
        return Ok(PreprocessReport {
            flags,
            triple_counts,
            survivors: (0..n).collect(),
            plays_used: 0,
            t_per_triple: 0,
        });
    }

    let t = preprocess_plays_per_triple(n, delta, cfg);
    let before = env.query_count();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let triple = [a, b, c];
                let mut counts = [0u64; 3];
                env.play_counts(&triple, t, &mut counts)?;
                for (pos, &arm) in triple.iter().enumerate() {
                    // N <= 0.26 t, compared in integers
                    if 100 * counts[pos] <= 26 * t {
                        flags[arm] = true;
                    }
                }
                triple_counts.insert(triple, counts);
            }
        }
    }
    let survivors = (0..n).filter(|&i| !flags[i]).collect();
    Ok(PreprocessReport {
        flags,
        triple_counts,
        survivors,
        plays_used: env.query_count() - before,
        t_per_triple: t,
    })
}
