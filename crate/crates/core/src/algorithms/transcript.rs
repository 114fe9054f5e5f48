use serde::{Deserialize, Serialize};

use crate::choice::ChoiceEnv;
use crate::correlation::BlockPartition;
use crate::error::{Error, Result};

/// One answered play.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub subset: Vec<usize>,
    pub winner: usize,
}

/// Wraps an environment and logs every play it answers.
#[derive(Debug, Clone)]
pub struct Recorder<E> {
    inner: E,
    log: Vec<PlayRecord>,
}

impl<E: ChoiceEnv> Recorder<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            log: Vec::new(),
        }
    }

    pub fn log(&self) -> &[PlayRecord] {
        &self.log
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn into_parts(self) -> (E, Vec<PlayRecord>) {
        (self.inner, self.log)
    }
}

impl<E: ChoiceEnv> ChoiceEnv for Recorder<E> {
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    fn play(&mut self, subset: &[usize]) -> Result<usize> {
        let winner = self.inner.play(subset)?;
        self.log.push(PlayRecord {
            subset: subset.to_vec(),
            winner,
        });
        Ok(winner)
    }

    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }
}

/// Wins per block: entry `b` counts the records whose winner lies in block `b`.
pub fn cluster_win_counts(log: &[PlayRecord], partition: &BlockPartition) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; partition.num_blocks()];
    for (i, rec) in log.iter().enumerate() {
        if !rec.subset.contains(&rec.winner) {
            return Err(Error::CorruptLog(format!(
                "record {i}: winner {} not in subset {:?}",
                rec.winner, rec.subset
            )));
        }
        if rec.winner >= partition.len() {
            return Err(Error::CorruptLog(format!(
                "record {i}: winner {} outside the {}-arm partition",
                rec.winner,
                partition.len()
            )));
        }
        counts[partition.block_of(rec.winner)] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(subset: &[usize], winner: usize) -> PlayRecord {
        PlayRecord {
            subset: subset.to_vec(),
            winner,
        }
    }

    #[test]
    fn counts_by_block() {
        let p = BlockPartition::new(vec![0, 1, 1]).unwrap();
        let log = [
            rec(&[0, 1, 2], 0),
            rec(&[0, 1, 2], 1),
            rec(&[1, 2], 2),
            rec(&[0, 1], 1),
        ];
        assert_eq!(cluster_win_counts(&log, &p).unwrap(), vec![1, 3]);
        let single = BlockPartition::new(vec![0, 0, 0]).unwrap();
        assert_eq!(cluster_win_counts(&log, &single).unwrap(), vec![4]);
    }

    #[test]
    fn winner_outside_subset_is_corrupt() {
        let p = BlockPartition::new(vec![0, 1, 1]).unwrap();
        let log = [rec(&[0, 1], 2)];
        assert!(matches!(
            cluster_win_counts(&log, &p),
            Err(Error::CorruptLog(_))
        ));
    }
}
