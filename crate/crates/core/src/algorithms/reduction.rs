use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::choice::{ChoiceEnv, InstanceSpec, ScoreVector};
use crate::correlation::{BlockPartition, CorrelationSpec};
use crate::error::{Error, Result};

/// An `r`-arm environment presented as an `n`-arm one whose extra arms are
/// dummies that never beat a real arm.
///
/// A play of `S` forwards `S ∩ 0..r` to the inner environment, or returns a
/// uniform member of `S` when it holds only dummies. Every lifted play counts
/// as one query, whether or not the inner environment was consulted.
#[derive(Debug, Clone)]
pub struct LiftedEnvironment<E> {
    inner: E,
    n: usize,
    k: usize,
    rng: Xoshiro256PlusPlus,
    queries: u64,
    seen: Vec<bool>,
    real: Vec<usize>,
}

impl<E: ChoiceEnv> LiftedEnvironment<E> {
    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn max_subset_size(&self) -> usize {
        self.k
    }
}

/// Lifts `inner` (on `0..r`) to `0..n`, accepting subsets of at most `k` arms.
pub fn reduction_adapter<E: ChoiceEnv>(
    inner: E,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<LiftedEnvironment<E>> {
    let r = inner.num_arms();
    if n < r {
        return Err(Error::domain(format!(
            "lifted size n = {n} is below r = {r}"
        )));
    }
    if k < 2 || k > n {
        return Err(Error::domain(format!(
            "subset size k = {k} must lie in 2..={n}"
        )));
    }
    Ok(LiftedEnvironment {
        inner,
        n,
        k,
        rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        queries: 0,
        seen: vec![false; n],
        real: Vec::with_capacity(k),
    })
}

impl<E: ChoiceEnv> ChoiceEnv for LiftedEnvironment<E> {
    fn num_arms(&self) -> usize {
        self.n
    }

    fn play(&mut self, subset: &[usize]) -> Result<usize> {
        if subset.is_empty() {
            return Err(Error::subset("subset is empty"));
        }
        if subset.len() > self.k {
            return Err(Error::subset(format!(
                "subset of {} arms exceeds k = {}",
                subset.len(),
                self.k
            )));
        }
        let mut bad = None;
        for &arm in subset {
            if arm >= self.n {
                bad = Some(format!("arm {arm} outside 0..{}", self.n));
                break;
            }
            if std::mem::replace(&mut self.seen[arm], true) {
                bad = Some(format!("arm {arm} appears twice"));
                break;
            }
        }
        for &arm in subset {
            if arm < self.n {
                self.seen[arm] = false;
            }
        }
        if let Some(msg) = bad {
            return Err(Error::subset(msg));
        }

        let r = self.inner.num_arms();
        self.real.clear();
        self.real.extend(subset.iter().copied().filter(|&a| a < r));
        self.queries += 1;
        if self.real.is_empty() {
            return Ok(subset[self.rng.random_range(0..subset.len())]);
        }
        let real = std::mem::take(&mut self.real);
        let out = self.inner.play(&real);
        self.real = real;
        out
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// The directly constructed `n`-arm instance that a lifted independent
/// `r`-arm instance simulates.
///
/// Real arms keep their scores and dummies get `-inf`. Arms `0..r-1` are
/// singleton blocks and arm `r-1` shares one block with every dummy, so the
/// block rank stays `r`.
pub fn reduction_instance(inner: &InstanceSpec, n: usize) -> Result<InstanceSpec> {
    if !matches!(inner.correlation(), CorrelationSpec::Independent) {
        return Err(Error::config(
            "the reduction lifts independent instances only",
        ));
    }
    let r = inner.num_arms();
    if n < r {
        return Err(Error::domain(format!(
            "lifted size n = {n} is below r = {r}"
        )));
    }
    let mut scores = inner.scores().values().to_vec();
    scores.resize(n, f64::NEG_INFINITY);
    let assignment = (0..n).map(|i| i.min(r - 1)).collect();
    InstanceSpec::new(
        ScoreVector::new(scores)?,
        inner.noise(),
        CorrelationSpec::BlockRank(BlockPartition::new(assignment)?),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{Environment, NoiseFamily};

    fn inner(seed: u64) -> Environment {
        Environment::new(
            InstanceSpec::independent(vec![0.3, 0.0, 0.1], NoiseFamily::StdGaussian).unwrap(),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn singleton_real_arm_always_wins() {
        let mut lifted = reduction_adapter(inner(1), 6, 4, 2).unwrap();
        for _ in 0..1000 {
            assert_eq!(lifted.play(&[4, 1, 5]).unwrap(), 1);
        }
        assert_eq!(lifted.query_count(), 1000);
        assert_eq!(lifted.inner().query_count(), 1000);
    }

    #[test]
    fn dummy_only_subsets_are_uniform_and_counted() {
        let mut lifted = reduction_adapter(inner(1), 6, 4, 2).unwrap();
        let mut counts = [0u32; 6];
        for _ in 0..30_000 {
            counts[lifted.play(&[3, 4, 5]).unwrap()] += 1;
        }
        for &c in &counts[3..] {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
        }
        assert_eq!(lifted.query_count(), 30_000);
        assert_eq!(lifted.inner().query_count(), 0);
    }

    #[test]
    fn rejects_bad_subsets() {
        let mut lifted = reduction_adapter(inner(1), 6, 3, 2).unwrap();
        assert!(lifted.play(&[0, 1, 2, 3]).is_err());
        assert!(lifted.play(&[0, 0]).is_err());
        assert!(lifted.play(&[6]).is_err());
        assert!(lifted.play(&[]).is_err());
        // failed validation leaves no residue
        assert!(lifted.play(&[0, 1]).is_ok());
        assert_eq!(lifted.query_count(), 1);
        assert!(reduction_adapter(inner(1), 2, 2, 0).is_err());
    }

    #[test]
    fn direct_instance_layout() {
        let spec = reduction_instance(inner(0).spec(), 6).unwrap();
        assert_eq!(spec.scores().values()[..3], [0.3, 0.0, 0.1]);
        assert!(spec.scores().values()[3..]
            .iter()
            .all(|s| *s == f64::NEG_INFINITY));
        let p = spec.correlation().partition().unwrap();
        assert_eq!(p.assignment(), &[0, 1, 2, 2, 2, 2]);
        assert_eq!(p.num_blocks(), 3);
    }
}
