//! Canonical instance constructions: the hard families used in lower bounds,
//! the dueling/triple separation instance, the fixed-size infeasibility
//! instance, and randomised block-rank fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::choice::{InstanceSpec, NoiseFamily, ScoreVector};
use crate::correlation::{planar_instance, BlockPartition, CorrelationSpec};
use crate::error::{Error, Result};

/// A named instance with its provenance. Serializes as the instance JSON
/// plus `name` and `provenance` fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCatalogEntry {
    pub name: String,
    pub provenance: String,
    #[serde(flatten)]
    pub spec: InstanceSpec,
}

impl InstanceCatalogEntry {
    fn new(name: &str, provenance: &str, spec: InstanceSpec) -> Self {
        Self {
            name: name.to_owned(),
            provenance: provenance.to_owned(),
            spec,
        }
    }

    pub fn best_arm(&self) -> usize {
        self.spec.scores().best_arm()
    }

    pub fn epsilon_best(&self, epsilon: f64) -> Vec<usize> {
        self.spec.scores().epsilon_best(epsilon)
    }

    /// Number of blocks of the correlation structure; `n` when independent.
    pub fn block_rank(&self) -> usize {
        match self.spec.correlation().partition() {
            Some(p) => p.num_blocks(),
            None => self.spec.num_arms(),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.spec.num_arms()
    }
}

/// True instance of the independent lower bound: Gumbel noise, arm 0 at 1,
/// every other arm at `1 - epsilon`.
pub fn independent_hard(n: usize, epsilon: f64) -> Result<InstanceCatalogEntry> {
    if n < 2 {
        return Err(Error::domain(format!(
            "independent_hard needs n >= 2, got {n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(Error::domain(format!(
            "epsilon = {epsilon} must lie in (0, 1/4]"
        )));
    }
    let mut scores = vec![1.0 - epsilon; n];
    scores[0] = 1.0;
    let spec = InstanceSpec::independent(scores, NoiseFamily::Gumbel01)?;
    Ok(InstanceCatalogEntry::new(
        "independent_hard",
        "independent lower bound, true instance",
        spec,
    ))
}

/// Alternative instance of the independent lower bound with arm `a` promoted
/// to 1, arm 0 at `1 - epsilon` and the rest at `1 - 2 epsilon`.
pub fn perturbed_hard(n: usize, a: usize, epsilon: f64) -> Result<InstanceCatalogEntry> {
    if n < 2 {
        return Err(Error::domain(format!(
            "perturbed_hard needs n >= 2, got {n}"
        )));
    }
    if a == 0 || a >= n {
        return Err(Error::domain(format!(
            "perturbed arm {a} must lie in 1..{n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(Error::domain(format!(
            "epsilon = {epsilon} must lie in (0, 1/4]"
        )));
    }
    let mut scores = vec![1.0 - 2.0 * epsilon; n];
    scores[0] = 1.0 - epsilon;
    scores[a] = 1.0;
    let spec = InstanceSpec::independent(scores, NoiseFamily::Gumbel01)?;
    Ok(InstanceCatalogEntry::new(
        "perturbed_hard",
        "independent lower bound, perturbed instance",
        spec,
    ))
}

/// Two blocks under Gaussian noise: a singleton best arm at `mu + epsilon`
/// and `n - 1` identical arms at `mu`. Duels barely separate the best arm,
/// triples expose it.
pub fn dueling_hard(n: usize, mu: f64, epsilon: f64) -> Result<InstanceCatalogEntry> {
    if n < 3 {
        return Err(Error::domain(format!("dueling_hard needs n >= 3, got {n}")));
    }
    let mut scores = vec![mu; n];
    scores[0] = mu + epsilon;
    let mut assignment = vec![1; n];
    assignment[0] = 0;
    let spec = InstanceSpec::new(
        ScoreVector::new(scores)?,
        NoiseFamily::StdGaussian,
        CorrelationSpec::BlockRank(BlockPartition::new(assignment)?),
    )?;
    Ok(InstanceCatalogEntry::new(
        "dueling_hard",
        "dueling versus triple separation instance",
        spec,
    ))
}

/// Default multiplier on epsilon for the best arm of [`fixed_k_infeasible`].
pub const DEFAULT_C_FACTOR: f64 = 1.01;

/// Block-rank three Gumbel instance where, under fixed subset size, a
/// clearly worse singleton out-wins every member of a large block.
///
/// Blocks `{0}`, `{1}`, `{2..n}`; scores `mu + c_factor*epsilon`, `mu`, and
/// `mu + epsilon` for the large block.
pub fn fixed_k_infeasible(
    n: usize,
    mu: f64,
    epsilon: f64,
    c_factor: f64,
) -> Result<InstanceCatalogEntry> {
    if n < 10 {
        return Err(Error::domain(format!(
            "fixed_k_infeasible needs n >= 10, got {n}"
        )));
    }
    if !(c_factor > 1.0) {
        return Err(Error::domain(format!(
            "c_factor = {c_factor} must exceed 1"
        )));
    }
    let mut scores = vec![mu + epsilon; n];
    scores[0] = mu + c_factor * epsilon;
    scores[1] = mu;
    let mut assignment = vec![2; n];
    assignment[0] = 0;
    assignment[1] = 1;
    let spec = InstanceSpec::new(
        ScoreVector::new(scores)?,
        NoiseFamily::Gumbel01,
        CorrelationSpec::BlockRank(BlockPartition::new(assignment)?),
    )?;
    Ok(InstanceCatalogEntry::new(
        "fixed_k_infeasible",
        "fixed subset size infeasibility instance",
        spec,
    ))
}

/// Random block-rank fixture with Gaussian noise.
///
/// Arms are split into `r` nonempty blocks at random (block ids relabelled
/// by smallest member, so arm 0 sits in block 0). Each block draws a base
/// level in `[0, 1)`; its members other than arm 0 score `base - U[0,
/// intra_spread]`. Arm 0 scores `gap` above every other arm.
pub fn random_block_instance(
    n: usize,
    r: usize,
    gap: f64,
    intra_spread: f64,
    seed: u64,
) -> Result<InstanceCatalogEntry> {
    if r < 1 || r > n {
        return Err(Error::domain(format!(
            "need 1 <= r <= n, got r = {r}, n = {n}"
        )));
    }
    if !(gap > 0.0) {
        return Err(Error::domain(format!("gap = {gap} must be > 0")));
    }
    if !(intra_spread >= 0.0) {
        return Err(Error::domain(format!(
            "intra_spread = {intra_spread} must be >= 0"
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut raw = vec![0usize; n];
    for (pos, &arm) in order.iter().enumerate() {
        raw[arm] = if pos < r { pos } else { rng.random_range(0..r) };
    }
    // relabel blocks in order of first appearance
    let mut relabel = vec![usize::MAX; r];
    let mut next = 0;
    let assignment: Vec<usize> = raw
        .iter()
        .map(|&b| {
            if relabel[b] == usize::MAX {
                relabel[b] = next;
                next += 1;
            }
            relabel[b]
        })
        .collect();

    let base: Vec<f64> = (0..r).map(|_| rng.random::<f64>()).collect();
    let mut scores: Vec<f64> = assignment
        .iter()
        .map(|&b| base[b] - intra_spread * rng.random::<f64>())
        .collect();
    let rest_max = scores[1..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    scores[0] = if n == 1 { gap } else { rest_max + gap };

    let spec = InstanceSpec::new(
        ScoreVector::new(scores)?,
        NoiseFamily::StdGaussian,
        CorrelationSpec::BlockRank(BlockPartition::new(assignment)?),
    )?;
    Ok(InstanceCatalogEntry::new(
        "random_block",
        "randomised block-rank fixture",
        spec,
    ))
}

/// Exact winner law of a Gumbel block-rank instance.
///
/// Each block's members in the subset collapse to one super-arm carrying the
/// block maximum; the super-arms follow the softmax law and a block's share
/// is split evenly among its tied maxima. Other members never win.
pub fn collapsed_mnl_win_probs(
    scores: &ScoreVector,
    partition: &BlockPartition,
    subset: &[usize],
) -> Result<Vec<f64>> {
    if partition.len() != scores.len() {
        return Err(Error::config(
            "partition and scores disagree on the number of arms",
        ));
    }
    let n = scores.len();
    let mut seen = vec![false; n];
    for &a in subset {
        if a >= n || std::mem::replace(&mut seen[a], true) {
            return Err(Error::subset(format!("invalid or repeated arm {a}")));
        }
    }
    if subset.is_empty() {
        return Err(Error::subset("subset is empty"));
    }
    let r = partition.num_blocks();
    let mut block_max = vec![f64::NEG_INFINITY; r];
    for &a in subset {
        let b = partition.block_of(a);
        block_max[b] = block_max[b].max(scores.get(a));
    }
    let all_dummy = subset.iter().all(|&a| !scores.get(a).is_finite());
    if all_dummy {
        // every draw is -inf: uniform tie-break over the whole subset
        return Ok(vec![1.0 / subset.len() as f64; subset.len()]);
    }
    let top = block_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weight: Vec<f64> = block_max
        .iter()
        .map(|&m| if m.is_finite() { (m - top).exp() } else { 0.0 })
        .collect();
    let total: f64 = weight.iter().sum();
    let mut ties = vec![0usize; r];
    for &a in subset {
        let b = partition.block_of(a);
        if scores.get(a) == block_max[b] && block_max[b].is_finite() {
            ties[b] += 1;
        }
    }
    Ok(subset
        .iter()
        .map(|&a| {
            let b = partition.block_of(a);
            if scores.get(a) == block_max[b] && block_max[b].is_finite() {
                weight[b] / total / ties[b] as f64
            } else {
                0.0
            }
        })
        .collect())
}

/// Generator names with one-line descriptions.
pub const CATALOG: &[(&str, &str)] = &[
    (
        "independent_hard",
        "Gumbel, arm 1 at 1, others at 1 - eps (params: n, epsilon)",
    ),
    (
        "perturbed_hard",
        "Gumbel, arm a at 1, arm 1 at 1 - eps, others 1 - 2 eps (params: n, a, epsilon)",
    ),
    (
        "dueling_hard",
        "Gaussian, blocks {1},{2..n}, arm 1 at mu + eps (params: n, mu, epsilon)",
    ),
    (
        "fixed_k_infeasible",
        "Gumbel, blocks {1},{2},{3..n} (params: n, mu, epsilon, c_factor)",
    ),
    (
        "random_block",
        "Gaussian random block-rank fixture (params: n, r, gap, intra_spread, seed)",
    ),
    (
        "planar",
        "Gaussian planar rank-2 construction (params: k, mu, epsilon)",
    ),
];

/// Serializable request for a catalog instance, as used in experiment plans.
/// Arm indices (`a`) are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogRequest {
    IndependentHard {
        n: usize,
        epsilon: f64,
    },
    PerturbedHard {
        n: usize,
        a: usize,
        epsilon: f64,
    },
    DuelingHard {
        n: usize,
        #[serde(default)]
        mu: f64,
        epsilon: f64,
    },
    FixedKInfeasible {
        n: usize,
        #[serde(default)]
        mu: f64,
        epsilon: f64,
        #[serde(default = "default_c_factor")]
        c_factor: f64,
    },
    RandomBlock {
        n: usize,
        r: usize,
        gap: f64,
        intra_spread: f64,
        seed: u64,
    },
    Planar {
        k: usize,
        #[serde(default)]
        mu: f64,
        epsilon: f64,
    },
}

fn default_c_factor() -> f64 {
    DEFAULT_C_FACTOR
}

impl CatalogRequest {
    pub fn build(&self) -> Result<InstanceCatalogEntry> {
        match *self {
            CatalogRequest::IndependentHard { n, epsilon } => independent_hard(n, epsilon),
            CatalogRequest::PerturbedHard { n, a, epsilon } => perturbed_hard(n, a, epsilon),
            CatalogRequest::DuelingHard { n, mu, epsilon } => dueling_hard(n, mu, epsilon),
            CatalogRequest::FixedKInfeasible {
                n,
                mu,
                epsilon,
                c_factor,
            } => fixed_k_infeasible(n, mu, epsilon, c_factor),
            CatalogRequest::RandomBlock {
                n,
                r,
                gap,
                intra_spread,
                seed,
            } => random_block_instance(n, r, gap, intra_spread, seed),
            CatalogRequest::Planar { k, mu, epsilon } => Ok(InstanceCatalogEntry::new(
                "planar",
                "planar rank-two impossibility construction",
                planar_instance(k, mu, epsilon)?,
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{mnl_win_probs, ChoiceEnv, Environment};

    #[test]
    fn independent_hard_scores() {
        let e = independent_hard(5, 0.1).unwrap();
        assert_eq!(e.spec.scores().values(), &[1.0, 0.9, 0.9, 0.9, 0.9]);
        assert_eq!(e.best_arm(), 0);
        assert_eq!(e.epsilon_best(0.05), vec![0]);
        let p = mnl_win_probs(e.spec.scores(), &[0, 3]).unwrap();
        let expected = 0.1f64.exp() / (0.1f64.exp() + 1.0);
        assert!((p[0] - expected).abs() < 1e-12);
        assert!((p[0] - 0.5250).abs() < 1e-4);
        assert!(independent_hard(1, 0.1).is_err());
        assert!(independent_hard(3, 0.3).is_err());
    }

    #[test]
    fn perturbed_hard_scores() {
        let e = perturbed_hard(4, 2, 0.1).unwrap();
        let s = e.spec.scores().values();
        let expected = [0.9, 0.8, 1.0, 0.8];
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        for a in 1..6 {
            let e = perturbed_hard(6, a, 0.1).unwrap();
            assert_eq!(e.epsilon_best(0.1), vec![a]);
        }
        assert!(matches!(perturbed_hard(4, 0, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn dueling_hard_structure() {
        let e = dueling_hard(5, 0.0, 0.1).unwrap();
        assert_eq!(e.block_rank(), 2);
        assert_eq!(e.spec.noise(), NoiseFamily::StdGaussian);
        let mut env = Environment::new(e.spec.clone(), 1).unwrap();
        // identical arms always tie and split duels evenly
        let m = 200_000;
        let wins = (0..m).filter(|_| env.play(&[2, 3]).unwrap() == 2).count();
        assert!((wins as f64 / m as f64 - 0.5).abs() < 0.005);
        assert!(dueling_hard(2, 0.0, 0.1).is_err());
    }

    #[test]
    fn fixed_k_ordering_inverts() {
        let e = fixed_k_infeasible(10, 0.0, 0.1, DEFAULT_C_FACTOR).unwrap();
        let scores = e.spec.scores();
        let partition = e.spec.correlation().partition().unwrap().clone();
        let k = 5;
        // every 5-subset holding arm 1 and some block-3 arm i
        let n = 10;
        let mut checked = 0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k || mask & 0b10 == 0 {
                continue;
            }
            let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let probs = collapsed_mnl_win_probs(scores, &partition, &subset).unwrap();
            let p2 = probs[subset.iter().position(|&a| a == 1).unwrap()];
            for (pos, &i) in subset.iter().enumerate() {
                if i >= 2 {
                    assert!(scores.get(i) > scores.get(1) + 0.1 - 1e-12);
                    assert!(probs[pos] < p2, "{subset:?}");
                    checked += 1;
                    if !subset.contains(&0) {
                        assert!(probs[pos] <= 1.0 / (2.0 * (k - 1) as f64) + 0.01);
                    }
                    // independent noise restores the order
                    let ind = mnl_win_probs(scores, &subset).unwrap();
                    assert!(ind[pos] > ind[subset.iter().position(|&a| a == 1).unwrap()]);
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn collapsed_law_matches_monte_carlo() {
        let e = fixed_k_infeasible(10, 0.0, 0.1, DEFAULT_C_FACTOR).unwrap();
        let env = Environment::new(e.spec.clone(), 3).unwrap();
        let partition = e.spec.correlation().partition().unwrap();
        for subset in [vec![1, 2, 3, 4, 5], vec![0, 1, 6, 7, 8]] {
            let exact = collapsed_mnl_win_probs(e.spec.scores(), partition, &subset).unwrap();
            let mc = env.estimate_win_probs(&subset, 400_000).unwrap();
            for (a, b) in exact.iter().zip(&mc.probs) {
                assert!((a - b).abs() < 0.005, "{exact:?} vs {:?}", mc.probs);
            }
        }
    }

    #[test]
    fn collapsed_law_dummies() {
        let scores = ScoreVector::new(vec![0.5, f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap();
        let p = BlockPartition::new(vec![0, 1, 1]).unwrap();
        assert_eq!(
            collapsed_mnl_win_probs(&scores, &p, &[0, 1]).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            collapsed_mnl_win_probs(&scores, &p, &[1, 2]).unwrap(),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn random_block_properties() {
        for seed in 0..50 {
            let e = random_block_instance(9, 3, 0.2, 0.3, seed).unwrap();
            let s = e.spec.scores();
            assert_eq!(e.best_arm(), 0);
            assert_eq!(e.block_rank(), 3);
            let p = e.spec.correlation().partition().unwrap();
            assert_eq!(p.block_of(0), 0);
            for i in 1..9 {
                assert!(s.get(0) - s.get(i) >= 0.2 - 1e-12);
            }
        }
        let singletons = random_block_instance(6, 6, 0.1, 0.0, 1).unwrap();
        let p = singletons.spec.correlation().partition().unwrap();
        assert!(p.blocks().iter().all(|b| b.len() == 1));
        let one = random_block_instance(6, 1, 0.1, 0.2, 1).unwrap();
        assert_eq!(one.block_rank(), 1);
        assert!(random_block_instance(3, 4, 0.1, 0.0, 0).is_err());
    }

    #[test]
    fn catalog_requests_build_and_serialize() {
        let req: CatalogRequest =
            serde_json::from_str(r#"{"generator":"dueling_hard","n":6,"epsilon":0.05}"#).unwrap();
        let entry = req.build().unwrap();
        assert_eq!(entry.name, "dueling_hard");
        let json = serde_json::to_value(&entry).unwrap();
        assert!(json.get("scores").is_some());
        assert_eq!(json["provenance"], entry.provenance.as_str());
        let back: InstanceCatalogEntry = serde_json::from_value(json).unwrap();
        assert_eq!(back, entry);
        let fk: CatalogRequest =
            serde_json::from_str(r#"{"generator":"fixed_k_infeasible","n":10,"epsilon":0.1}"#)
                .unwrap();
        assert!(
            matches!(fk, CatalogRequest::FixedKInfeasible { c_factor, .. } if c_factor == DEFAULT_C_FACTOR)
        );
        assert_eq!(CATALOG.len(), 6);
    }
}
