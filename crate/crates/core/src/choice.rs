//! Random-utility winner feedback.
//!
//! Arm `i` draws utility `X_i = mu_i + zeta_i`; a played subset reports the
//! member with the largest draw. Arms are indexed from 0 throughout the
//! library.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Binomial, Distribution, Exp, Gumbel, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::correlation::{make_sampler, sector_win_probs, CorrelationSpec, SamplerFactor};
use crate::error::{Error, Result};
use crate::instances::collapsed_mnl_win_probs;

/// Default Monte Carlo sample count for win-probability estimates.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// Default cap on `n` for full subset enumeration in [`epsilon_bar`].
pub const DEFAULT_MAX_ENUMERATION: usize = 10;

/// Ground-truth utility scores.
///
/// Entries are finite, except that `-inf` marks a dummy arm that never wins
/// against a finite one. Serialized as a JSON list where dummies are the
/// string `"-inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScoreRepr>", into = "Vec<ScoreRepr>")]
pub struct ScoreVector(Vec<f64>);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScoreRepr {
    Finite(f64),
    Symbol(String),
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::domain("score vector must have at least one arm"));
        }
        if let Some(bad) = scores
            .iter()
            .find(|&&s| !(s.is_finite() || s == f64::NEG_INFINITY))
        {
            return Err(Error::domain(format!("score {bad} is not finite")));
        }
        if scores.iter().all(|s| !s.is_finite()) {
            return Err(Error::domain("at least one score must be finite"));
        }
        Ok(Self(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.0[arm]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-indexed arm with the maximal score.
    pub fn best_arm(&self) -> usize {
        let max = self.max();
        self.0.iter().position(|&s| s == max).expect("nonempty")
    }

    /// Arms with `mu_i > mu_max - epsilon`.
    pub fn epsilon_best(&self, epsilon: f64) -> Vec<usize> {
        let threshold = self.max() - epsilon;
        (0..self.len()).filter(|&i| self.0[i] > threshold).collect()
    }

    /// Adds `shift` to every finite score.
    pub fn shifted(&self, shift: f64) -> Self {
        Self(self.0.iter().map(|s| s + shift).collect())
    }
}

impl TryFrom<Vec<ScoreRepr>> for ScoreVector {
    type Error = Error;

    fn try_from(raw: Vec<ScoreRepr>) -> Result<Self> {
        let scores = raw
            .into_iter()
            .map(|r| match r {
                ScoreRepr::Finite(v) => Ok(v),
                ScoreRepr::Symbol(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
                ScoreRepr::Symbol(s) => Err(Error::domain(format!("unknown score literal {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(scores)
    }
}

impl From<ScoreVector> for Vec<ScoreRepr> {
    fn from(v: ScoreVector) -> Self {
        v.0.into_iter()
            .map(|s| {
                if s.is_finite() {
                    ScoreRepr::Finite(s)
                } else {
                    ScoreRepr::Symbol("-inf".into())
                }
            })
            .collect()
    }
}

/// Marginal law of each noise coordinate.
///
/// Gumbel(0, 1) keeps its location-0 convention (mean equal to the
/// Euler-Mascheroni constant); choice probabilities are shift invariant, and
/// this is the parametrisation under which winner probabilities are the
/// softmax of the scores. Every other family is centred to mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gumbel01,
    StdGaussian,
    /// Uniform on `[-half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
    /// `Exp(rate) - 1/rate`.
    Exponential {
        rate: f64,
    },
}

impl NoiseFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            NoiseFamily::Uniform { half_width }
                if !(half_width > 0.0 && half_width.is_finite()) =>
            {
                Err(Error::domain(format!(
                    "uniform half-width {half_width} must be > 0"
                )))
            }
            NoiseFamily::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => Err(
                Error::domain(format!("exponential rate {rate} must be > 0")),
            ),
            _ => Ok(()),
        }
    }

    fn sampler(&self) -> NoiseSampler {
        match *self {
            NoiseFamily::Gumbel01 => {
                NoiseSampler::Gumbel(Gumbel::new(0.0, 1.0).expect("valid Gumbel parameters"))
            }
            NoiseFamily::StdGaussian => NoiseSampler::Gaussian,
            NoiseFamily::Uniform { half_width } => NoiseSampler::Uniform(half_width),
            NoiseFamily::Exponential { rate } => {
                NoiseSampler::Exponential(Exp::new(rate).expect("validated rate"), 1.0 / rate)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum NoiseSampler {
    Gumbel(Gumbel<f64>),
    Gaussian,
    Uniform(f64),
    Exponential(Exp<f64>, f64),
}

impl NoiseSampler {
    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Gumbel(g) => g.sample(rng),
            NoiseSampler::Gaussian => rng.sample(StandardNormal),
            NoiseSampler::Uniform(a) => rng.random_range(-*a..*a),
            NoiseSampler::Exponential(e, mean) => e.sample(rng) - mean,
        }
    }
}

/// Scores, noise law and correlation structure: everything that defines an
/// environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct InstanceSpec {
    scores: ScoreVector,
    noise: NoiseFamily,
    correlation: CorrelationSpec,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    scores: ScoreVector,
    noise: NoiseFamily,
    correlation: CorrelationSpec,
}

impl InstanceSpec {
    pub fn new(
        scores: ScoreVector,
        noise: NoiseFamily,
        correlation: CorrelationSpec,
    ) -> Result<Self> {
        noise.validate()?;
        if let Some(dim) = correlation.dim() {
            if dim != scores.len() {
                return Err(Error::config(format!(
                    "correlation structure covers {dim} arms but there are {} scores",
                    scores.len()
                )));
            }
        }
        make_sampler(&correlation, &noise)?;
        Ok(Self {
            scores,
            noise,
            correlation,
        })
    }

    pub fn independent(scores: Vec<f64>, noise: NoiseFamily) -> Result<Self> {
        Self::new(
            ScoreVector::new(scores)?,
            noise,
            CorrelationSpec::Independent,
        )
    }

    pub fn num_arms(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &ScoreVector {
        &self.scores
    }

    pub fn noise(&self) -> NoiseFamily {
        self.noise
    }

    pub fn correlation(&self) -> &CorrelationSpec {
        &self.correlation
    }

    /// Same noise and correlation with different scores.
    pub fn with_scores(&self, scores: ScoreVector) -> Result<Self> {
        Self::new(scores, self.noise, self.correlation.clone())
    }
}

impl TryFrom<InstanceRepr> for InstanceSpec {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        Self::new(r.scores, r.noise, r.correlation)
    }
}

impl From<InstanceSpec> for InstanceRepr {
    fn from(s: InstanceSpec) -> Self {
        InstanceRepr {
            scores: s.scores,
            noise: s.noise,
            correlation: s.correlation,
        }
    }
}

/// Accuracy and confidence of a PAC run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacParams {
    epsilon: f64,
    delta: f64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::domain(format!(
                "epsilon = {epsilon} must lie in (0, 1/2]"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("delta = {delta} must lie in (0, 1)")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Anything that answers subset plays with a winner.
pub trait ChoiceEnv {
    fn num_arms(&self) -> usize;

    /// Plays `subset` once and returns the winning arm.
    fn play(&mut self, subset: &[usize]) -> Result<usize>;

    /// Number of plays answered so far.
    fn query_count(&self) -> u64;

    /// Plays `subset` `times` times, adding one to `counts[i]` whenever
    /// `subset[i]` wins.
    fn play_counts(&mut self, subset: &[usize], times: u64, counts: &mut [u64]) -> Result<()> {
        check_counts_len(subset, counts)?;
        for _ in 0..times {
            let w = self.play(subset)?;
            let pos = subset
                .iter()
                .position(|&a| a == w)
                .ok_or_else(|| Error::CorruptLog(format!("winner {w} not in subset {subset:?}")))?;
            counts[pos] += 1;
        }
        Ok(())
    }
}

fn check_counts_len(subset: &[usize], counts: &[u64]) -> Result<()> {
    if counts.len() != subset.len() {
        return Err(Error::domain(format!(
            "{} counters for a subset of {} arms",
            counts.len(),
            subset.len()
        )));
    }
    Ok(())
}

/// Empirical winner frequencies for one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinProbEstimate {
    /// Subset members, in the order the estimate is indexed by.
    pub members: Vec<usize>,
    pub probs: Vec<f64>,
    /// Binomial standard error `sqrt(p (1 - p) / samples)`.
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl WinProbEstimate {
    fn from_counts(members: Vec<usize>, counts: &[u64], samples: usize) -> Self {
        let m = samples as f64;
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
        let stderr = probs.iter().map(|p| (p * (1.0 - p) / m).sqrt()).collect();
        Self {
            members,
            probs,
            stderr,
            samples,
        }
    }

    /// Probability of `arm`, if it is a member.
    pub fn prob_of(&self, arm: usize) -> Option<f64> {
        self.members
            .iter()
            .position(|&a| a == arm)
            .map(|i| self.probs[i])
    }
}

#[derive(Debug, Clone)]
struct Scratch {
    stamp: u64,
    seen: Vec<u64>,
    slot_stamp: Vec<u64>,
    slot_value: Vec<f64>,
}

impl Scratch {
    fn new(n: usize, slots: usize) -> Self {
        Self {
            stamp: 0,
            seen: vec![0; n],
            slot_stamp: vec![0; slots],
            slot_value: vec![0.0; slots],
        }
    }
}

impl Scratch {
    /// Value of shared draw `slot` in the current stamp, drawing it on first use.
    #[inline(always)]
    fn block_draw(&mut self, slot: usize, draw: impl FnOnce() -> f64) -> f64 {
        if self.slot_stamp[slot] != self.stamp {
            self.slot_stamp[slot] = self.stamp;
            self.slot_value[slot] = draw();
        }
        self.slot_value[slot]
    }
}

/// Position of the largest `score + noise` over `subset`, ties broken
/// uniformly. Dummy arms draw no noise when `dummies` is set; at least one
/// member must be finite.
#[inline(always)]
fn argmax<R: Rng>(
    subset: &[usize],
    scores: &[f64],
    dummies: bool,
    rng: &mut R,
    mut noise: impl FnMut(&mut R, usize) -> f64,
) -> usize {
    let mut utility = |rng: &mut R, arm: usize| {
        let mu = scores[arm];
        if dummies && !mu.is_finite() {
            mu
        } else {
            mu + noise(rng, arm)
        }
    };
    let mut best = utility(rng, subset[0]);
    let mut winner = 0;
    let mut ties = 1u32;
    for (pos, &arm) in subset.iter().enumerate().skip(1) {
        let x = utility(rng, arm);
        if x == best {
            // reservoir step keeps the pick uniform over all tied members
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                winner = pos;
            }
        }
        // written as selects so the compiler can avoid a data-dependent branch
        let gt = x > best;
        winner = if gt { pos } else { winner };
        ties = if gt { 1 } else { ties };
        best = if gt { x } else { best };
    }
    winner
}

/// A playable instance with its own seeded random stream and query counter.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: Arc<InstanceSpec>,
    sampler: Arc<SamplerFactor>,
    noise: NoiseSampler,
    has_dummies: bool,
    rng: Xoshiro256PlusPlus,
    queries: u64,
    scratch: Scratch,
}

impl Environment {
    pub fn new(spec: InstanceSpec, seed: u64) -> Result<Self> {
        let sampler = make_sampler(spec.correlation(), &spec.noise())?;
        Ok(Self::from_parts(Arc::new(spec), Arc::new(sampler), seed))
    }

    fn from_parts(spec: Arc<InstanceSpec>, sampler: Arc<SamplerFactor>, seed: u64) -> Self {
        let n = spec.num_arms();
        let slots = match sampler.as_ref() {
            SamplerFactor::Identity => 0,
            SamplerFactor::BlockCopy(p) => p.num_blocks(),
            SamplerFactor::LinearFactor(f) => f.latent_dim(),
        };
        Self {
            noise: spec.noise().sampler(),
            has_dummies: spec.scores().values().iter().any(|s| !s.is_finite()),
            spec,
            sampler,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            queries: 0,
            scratch: Scratch::new(n, slots),
        }
    }

    /// Fresh environment on the same instance with a new seed and a zero
    /// query counter. Shares the (immutable) spec and sampler.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self::from_parts(self.spec.clone(), self.sampler.clone(), seed)
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn sampler(&self) -> &SamplerFactor {
        &self.sampler
    }

    /// Draws one full utility vector `mu + zeta`. Does not count as a query.
    pub fn sample_utilities(&mut self) -> Vec<f64> {
        let n = self.spec.num_arms();
        self.scratch.stamp += 1;
        (0..n)
            .map(|arm| self.spec.scores().get(arm) + self.noise_for(arm))
            .collect()
    }

    /// Noise draw for `arm` within the current stamp; draws shared between
    /// arms (blocks, latent factors) are reused inside one stamp.
    #[inline]
    fn noise_for(&mut self, arm: usize) -> f64 {
        match self.sampler.as_ref() {
            SamplerFactor::Identity => self.noise.draw(&mut self.rng),
            SamplerFactor::BlockCopy(p) => {
                let b = p.block_of(arm);
                let s = &mut self.scratch;
                if s.slot_stamp[b] != s.stamp {
                    s.slot_stamp[b] = s.stamp;
                    s.slot_value[b] = self.noise.draw(&mut self.rng);
                }
                s.slot_value[b]
            }
            SamplerFactor::LinearFactor(f) => {
                let s = &mut self.scratch;
                let mut z = 0.0;
                for &(c, w) in f.row(arm) {
                    if s.slot_stamp[c] != s.stamp {
                        s.slot_stamp[c] = s.stamp;
                        s.slot_value[c] = self.rng.sample(StandardNormal);
                    }
                    z += w * s.slot_value[c];
                }
                z
            }
        }
    }

    fn validate_subset(&mut self, subset: &[usize]) -> Result<()> {
        let n = self.spec.num_arms();
        if subset.is_empty() {
            return Err(Error::subset("subset is empty"));
        }
        self.scratch.stamp += 1;
        let stamp = self.scratch.stamp;
        for &arm in subset {
            if arm >= n {
                return Err(Error::subset(format!("arm {arm} outside 0..{n}")));
            }
            if self.scratch.seen[arm] == stamp {
                return Err(Error::subset(format!("arm {arm} appears twice")));
            }
            self.scratch.seen[arm] = stamp;
        }
        Ok(())
    }

    /// Position in `subset` of one play's winner. The caller has validated
    /// `subset` and opened a fresh stamp.
    #[inline]
    fn draw_winner(&mut self, subset: &[usize]) -> usize {
        if subset.len() == 1 {
            return 0;
        }
        let scores = self.spec.scores().values();
        if self.has_dummies && subset.iter().all(|&a| !scores[a].is_finite()) {
            return self.rng.random_range(0..subset.len());
        }
        let rng = &mut self.rng;
        let s = &mut self.scratch;
        let dummies = self.has_dummies;
        match (self.sampler.as_ref(), self.noise) {
            (SamplerFactor::Identity, NoiseSampler::Gaussian) => {
                argmax(subset, scores, dummies, rng, |rng, _| {
                    rng.sample(StandardNormal)
                })
            }
            (SamplerFactor::Identity, noise) => {
                argmax(subset, scores, dummies, rng, |rng, _| noise.draw(rng))
            }
            (SamplerFactor::BlockCopy(p), NoiseSampler::Gaussian) => {
                let blocks = p.assignment();
                argmax(subset, scores, dummies, rng, |rng, arm| {
                    s.block_draw(blocks[arm], || rng.sample(StandardNormal))
                })
            }
            (SamplerFactor::BlockCopy(p), noise) => {
                let blocks = p.assignment();
                argmax(subset, scores, dummies, rng, |rng, arm| {
                    s.block_draw(blocks[arm], || noise.draw(rng))
                })
            }
            (SamplerFactor::LinearFactor(f), _) => {
                argmax(subset, scores, dummies, rng, |rng, arm| {
                    let mut z = 0.0;
                    for &(c, w) in f.row(arm) {
                        z += w * s.block_draw(c, || rng.sample(StandardNormal));
                    }
                    z
                })
            }
        }
    }

    /// Monte Carlo estimate of the winner law of `subset`.
    ///
    /// Runs on a stream forked from the current state, so neither the query
    /// counter nor the caller's random stream is affected.
    pub fn estimate_win_probs(&self, subset: &[usize], samples: usize) -> Result<WinProbEstimate> {
        if samples == 0 {
            return Err(Error::domain("samples must be >= 1"));
        }
        let mut fork = self.clone();
        fork.rng.long_jump();
        fork.validate_subset(subset)?;
        let mut counts = vec![0u64; subset.len()];
        for _ in 0..samples {
            fork.scratch.stamp += 1;
            counts[fork.draw_winner(subset)] += 1;
        }
        Ok(WinProbEstimate::from_counts(
            subset.to_vec(),
            &counts,
            samples,
        ))
    }

    fn small_subset_law(&self, subset: &[usize]) -> Option<Vec<f64>> {
        if !matches!(self.noise, NoiseSampler::Gaussian) || !(2..=3).contains(&subset.len()) {
            return None;
        }
        let mu: Vec<f64> = subset.iter().map(|&a| self.spec.scores().get(a)).collect();
        gaussian_small_subset_law(&mu, |i, j| self.sampler.covariance(subset[i], subset[j]))
    }

    /// Raw 64-bit draw from the environment stream, for callers that need to
    /// derive further seeds deterministically.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl ChoiceEnv for Environment {
    fn num_arms(&self) -> usize {
        self.spec.num_arms()
    }

    fn play(&mut self, subset: &[usize]) -> Result<usize> {
        self.validate_subset(subset)?;
        self.queries += 1;
        Ok(subset[self.draw_winner(subset)])
    }

    /// Pairs and triples under Gaussian noise draw their counts directly from
    /// the exact multinomial winner law when it is continuous; everything
    /// else is simulated play by play.
    fn play_counts(&mut self, subset: &[usize], times: u64, counts: &mut [u64]) -> Result<()> {
        check_counts_len(subset, counts)?;
        self.validate_subset(subset)?;
        if let Some(law) = self.small_subset_law(subset) {
            draw_multinomial(&mut self.rng, times, &law, counts);
            self.queries += times;
            return Ok(());
        }
        for _ in 0..times {
            self.scratch.stamp += 1;
            let pos = self.draw_winner(subset);
            counts[pos] += 1;
        }
        self.queries += times;
        Ok(())
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Adds a `Multinomial(times, law)` draw to `counts`, one conditional
/// binomial per category.
fn draw_multinomial<R: Rng>(rng: &mut R, times: u64, law: &[f64], counts: &mut [u64]) {
    let mut left = times;
    let mut mass = 1.0;
    for (i, &p) in law.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == law.len() {
            counts[i] += left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q)
            .expect("probability lies in [0, 1]")
            .sample(rng);
        counts[i] += k;
        left -= k;
        mass -= p;
    }
}

fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::subset("subset is empty"));
    }
    let mut seen = vec![false; n];
    for &arm in subset {
        if arm >= n {
            return Err(Error::subset(format!("arm {arm} outside 0..{n}")));
        }
        if std::mem::replace(&mut seen[arm], true) {
            return Err(Error::subset(format!("arm {arm} appears twice")));
        }
    }
    Ok(())
}

/// Softmax of the member scores: the winner law under independent Gumbel
/// noise. Dummy (`-inf`) arms get probability 0.
pub fn mnl_win_probs(scores: &ScoreVector, subset: &[usize]) -> Result<Vec<f64>> {
    check_subset(scores.len(), subset)?;
    let max = subset
        .iter()
        .map(|&a| scores.get(a))
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateSubset);
    }
    let weights: Vec<f64> = subset
        .iter()
        .map(|&a| (scores.get(a) - max).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `Pr(X_1 > X_2)` for independent standard Gaussian noise.
pub fn gaussian_pairwise_prob(mu1: f64, mu2: f64) -> f64 {
    normal_cdf((mu1 - mu2) / std::f64::consts::SQRT_2)
}

/// Difference variances at or below this are treated as degenerate.
const MIN_DIFF_VARIANCE: f64 = 1e-10;
/// Difference correlations beyond this are left to simulation.
const MAX_DIFF_CORRELATION: f64 = 1.0 - 1e-9;

/// Winner law of a Gaussian RUM on two or three members with finite means
/// `mu` and noise covariance `cov(i, j)` between members `i` and `j`.
///
/// `None` when the law is not continuous enough to compute this way: some
/// difference of utilities has (near) zero variance, or two differences are
/// (nearly) collinear. Ties then have positive probability or the orthant
/// integral is ill-conditioned.
pub fn gaussian_small_subset_law(
    mu: &[f64],
    cov: impl Fn(usize, usize) -> f64,
) -> Option<Vec<f64>> {
    if mu.iter().any(|m| !m.is_finite()) {
        return None;
    }
    // mean and variance of U_i - U_j
    let diff = |i: usize, j: usize| {
        let v = cov(i, i) + cov(j, j) - 2.0 * cov(i, j);
        (mu[i] - mu[j], v)
    };
    match mu.len() {
        2 => {
            let (m, v) = diff(0, 1);
            if v <= MIN_DIFF_VARIANCE {
                return None;
            }
            let p = normal_cdf(m / v.sqrt());
            Some(vec![p, 1.0 - p])
        }
        3 => {
            let mut probs = Vec::with_capacity(3);
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let (m1, v1) = diff(a, b);
                let (m2, v2) = diff(a, c);
                if v1 <= MIN_DIFF_VARIANCE || v2 <= MIN_DIFF_VARIANCE {
                    return None;
                }
                let c12 = cov(a, a) - cov(a, c) - cov(a, b) + cov(b, c);
                let rho = c12 / (v1 * v2).sqrt();
                if rho.abs() > MAX_DIFF_CORRELATION {
                    return None;
                }
                // Pr(U_a > U_b, U_a > U_c)
                probs.push(owens_t::biv_norm(-m1 / v1.sqrt(), -m2 / v2.sqrt(), rho).max(0.0));
            }
            let total: f64 = probs.iter().sum();
            Some(probs.into_iter().map(|p| p / total).collect())
        }
        _ => None,
    }
}

/// Exact winner law where a closed form exists.
///
/// Covered: independent Gumbel (softmax), exact block-rank Gumbel (collapsed
/// softmax), independent Gaussian duels, planar subsets whose members share a
/// score (sector measure), and singletons. Anything else is a configuration
/// error; use [`Environment::estimate_win_probs`] instead.
pub fn analytic_win_probs(spec: &InstanceSpec, subset: &[usize]) -> Result<Vec<f64>> {
    let scores = spec.scores();
    check_subset(scores.len(), subset)?;
    if subset.len() == 1 {
        return Ok(vec![1.0]);
    }
    match (spec.noise(), spec.correlation()) {
        (NoiseFamily::Gumbel01, CorrelationSpec::Independent) => mnl_win_probs(scores, subset),
        (NoiseFamily::Gumbel01, CorrelationSpec::BlockRank(p)) => {
            collapsed_mnl_win_probs(scores, p, subset)
        }
        (NoiseFamily::StdGaussian, CorrelationSpec::Independent) if subset.len() == 2 => {
            let (a, b) = (scores.get(subset[0]), scores.get(subset[1]));
            match (a.is_finite(), b.is_finite()) {
                (true, true) => {
                    let p = gaussian_pairwise_prob(a, b);
                    Ok(vec![p, 1.0 - p])
                }
                (true, false) => Ok(vec![1.0, 0.0]),
                (false, true) => Ok(vec![0.0, 1.0]),
                (false, false) => Err(Error::DegenerateSubset),
            }
        }
        (NoiseFamily::StdGaussian, CorrelationSpec::Planar { angles })
            if subset
                .iter()
                .all(|&a| scores.get(a) == scores.get(subset[0])) =>
        {
            let sub_angles: Vec<f64> = subset.iter().map(|&a| angles[a]).collect();
            Ok(sector_win_probs(&sub_angles))
        }
        (noise, corr) => Err(Error::config(format!(
            "no closed-form winner law for {noise:?} noise with {} correlation on this subset; \
             use Monte Carlo",
            correlation_name(corr)
        ))),
    }
}

pub(crate) fn correlation_name(c: &CorrelationSpec) -> &'static str {
    match c {
        CorrelationSpec::Independent => "independent",
        CorrelationSpec::BlockRank(_) => "block-rank",
        CorrelationSpec::NoisyBlockRank { .. } => "noisy block-rank",
        CorrelationSpec::Planar { .. } => "planar",
        CorrelationSpec::Explicit(_) => "explicit",
    }
}

/// Source of subset win probabilities for [`epsilon_bar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbOracle {
    Analytic,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Advantage ratio of the best member of `subset` over one non-epsilon-best
/// member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarEntry {
    pub subset: Vec<usize>,
    pub best: usize,
    pub arm: usize,
    pub prob_best: f64,
    pub prob_arm: f64,
    /// `prob_best / prob_arm`, `+inf` when `prob_arm` is 0.
    pub ratio: f64,
}

/// Minimum advantage ratio and where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonBar {
    pub value: f64,
    pub subset: Vec<usize>,
    pub arm: usize,
}

/// Every `(S, j)` pair entering the epsilon-BAR minimum: subsets holding at
/// least one epsilon-best arm and at least one other arm `j`.
pub fn bar_entries(
    spec: &InstanceSpec,
    epsilon: f64,
    oracle: ProbOracle,
    max_n: usize,
) -> Result<Vec<BarEntry>> {
    let n = spec.num_arms();
    if n > max_n {
        return Err(Error::domain(format!(
            "{n} arms exceeds the enumeration cap of {max_n}"
        )));
    }
    if n >= usize::BITS as usize {
        return Err(Error::domain("too many arms to enumerate"));
    }
    let scores = spec.scores();
    let good = scores.epsilon_best(epsilon);
    let is_good: Vec<bool> = (0..n).map(|i| good.contains(&i)).collect();
    if good.len() == n {
        return Err(Error::NoSuboptimalArm);
    }
    let mc_env = match oracle {
        ProbOracle::MonteCarlo { seed, .. } => Some(Environment::new(spec.clone(), seed)?),
        ProbOracle::Analytic => None,
    };

    let mut entries = Vec::new();
    for mask in 1usize..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if !subset.iter().any(|&i| is_good[i]) || subset.iter().all(|&i| is_good[i]) {
            continue;
        }
        let probs = match (&mc_env, oracle) {
            (Some(env), ProbOracle::MonteCarlo { samples, .. }) => {
                env.estimate_win_probs(&subset, samples)?.probs
            }
            _ => analytic_win_probs(spec, &subset)?,
        };
        let best_pos = subset.iter().enumerate().fold(0, |acc, (pos, &a)| {
            if scores.get(a) > scores.get(subset[acc]) {
                pos
            } else {
                acc
            }
        });
        let prob_best = probs[best_pos];
        for (pos, &j) in subset.iter().enumerate() {
            if is_good[j] {
                continue;
            }
            let prob_arm = probs[pos];
            let ratio = if prob_arm == 0.0 {
                f64::INFINITY
            } else {
                prob_best / prob_arm
            };
            entries.push(BarEntry {
                subset: subset.clone(),
                best: subset[best_pos],
                arm: j,
                prob_best,
                prob_arm,
                ratio,
            });
        }
    }
    Ok(entries)
}

/// Minimum best-item advantage ratio over all subsets containing an
/// epsilon-best arm and a non-epsilon-best arm.
pub fn epsilon_bar(
    spec: &InstanceSpec,
    epsilon: f64,
    oracle: ProbOracle,
    max_n: usize,
) -> Result<EpsilonBar> {
    let entries = bar_entries(spec, epsilon, oracle, max_n)?;
    let min = entries
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or(Error::NoSuboptimalArm)?;
    if min.ratio.is_infinite() {
        return Err(Error::InfiniteBar);
    }
    Ok(EpsilonBar {
        value: min.ratio,
        subset: min.subset.clone(),
        arm: min.arm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::BlockPartition;

    fn gumbel(scores: Vec<f64>) -> InstanceSpec {
        InstanceSpec::independent(scores, NoiseFamily::Gumbel01).unwrap()
    }

    #[test]
    fn score_vector_validation() {
        assert!(ScoreVector::new(vec![]).is_err());
        assert!(ScoreVector::new(vec![f64::NAN]).is_err());
        assert!(ScoreVector::new(vec![f64::INFINITY]).is_err());
        assert!(ScoreVector::new(vec![f64::NEG_INFINITY]).is_err());
        let s = ScoreVector::new(vec![0.2, f64::NEG_INFINITY, 0.5]).unwrap();
        assert_eq!(s.best_arm(), 2);
        assert_eq!(s.epsilon_best(0.31), vec![0, 2]);
        assert_eq!(s.epsilon_best(0.3), vec![2]);
    }

    #[test]
    fn score_json_uses_symbol_for_dummies() {
        let s = ScoreVector::new(vec![0.5, f64::NEG_INFINITY]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"[0.5,"-inf"]"#);
        assert_eq!(serde_json::from_str::<ScoreVector>(&text).unwrap(), s);
        assert!(serde_json::from_str::<ScoreVector>(r#"[0.5,"inf"]"#).is_err());
    }

    #[test]
    fn pac_params_bounds() {
        assert!(PacParams::new(0.5, 0.1).is_ok());
        assert!(PacParams::new(0.0, 0.1).is_err());
        assert!(PacParams::new(0.6, 0.1).is_err());
        assert!(PacParams::new(0.1, 1.0).is_err());
        assert!(PacParams::new(0.1, 0.0).is_err());
    }

    #[test]
    fn instance_validation() {
        let p = BlockPartition::new(vec![0, 0, 1]).unwrap();
        let scores = ScoreVector::new(vec![0.0; 3]).unwrap();
        // copy trick works for any family
        assert!(InstanceSpec::new(
            scores.clone(),
            NoiseFamily::Exponential { rate: 2.0 },
            CorrelationSpec::BlockRank(p.clone())
        )
        .is_ok());
        let noisy = CorrelationSpec::noisy_block(p, 0.0, 0.05).unwrap();
        assert!(matches!(
            InstanceSpec::new(scores.clone(), NoiseFamily::Gumbel01, noisy.clone()),
            Err(Error::Configuration(_))
        ));
        assert!(InstanceSpec::new(scores, NoiseFamily::StdGaussian, noisy).is_ok());
        let wrong_dim = InstanceSpec::new(
            ScoreVector::new(vec![0.0; 4]).unwrap(),
            NoiseFamily::StdGaussian,
            CorrelationSpec::BlockRank(BlockPartition::singletons(3)),
        );
        assert!(matches!(wrong_dim, Err(Error::Configuration(_))));
        assert!(
            InstanceSpec::independent(vec![0.0], NoiseFamily::Uniform { half_width: 0.0 }).is_err()
        );
    }

    #[test]
    fn instance_json_round_trip() {
        let spec = InstanceSpec::new(
            ScoreVector::new(vec![1.0, 0.5, f64::NEG_INFINITY]).unwrap(),
            NoiseFamily::Uniform { half_width: 2.0 },
            CorrelationSpec::BlockRank(BlockPartition::new(vec![0, 1, 1]).unwrap()),
        )
        .unwrap();
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["noise"]["family"], "uniform");
        assert_eq!(json["noise"]["params"]["half_width"], 2.0);
        assert_eq!(json["correlation"]["variant"], "block_rank");
        let back: InstanceSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);

        let gumbel: InstanceSpec = serde_json::from_str(
            r#"{"scores":[0,1],"noise":{"family":"gumbel01"},"correlation":{"variant":"independent"}}"#,
        )
        .unwrap();
        assert_eq!(gumbel.noise(), NoiseFamily::Gumbel01);
    }

    #[test]
    fn play_rejects_bad_subsets() {
        let mut env = Environment::new(gumbel(vec![0.0; 3]), 1).unwrap();
        assert!(matches!(env.play(&[]), Err(Error::InvalidSubset(_))));
        assert!(matches!(env.play(&[0, 3]), Err(Error::InvalidSubset(_))));
        assert!(matches!(env.play(&[1, 1]), Err(Error::InvalidSubset(_))));
        assert_eq!(env.query_count(), 0);
        assert_eq!(env.play(&[2]).unwrap(), 2);
        assert_eq!(env.query_count(), 1);
    }

    #[test]
    fn block_copy_gives_identical_draws() {
        let spec = InstanceSpec::new(
            ScoreVector::new(vec![0.0; 3]).unwrap(),
            NoiseFamily::Gumbel01,
            CorrelationSpec::BlockRank(BlockPartition::new(vec![0, 0, 1]).unwrap()),
        )
        .unwrap();
        let mut env = Environment::new(spec, 7).unwrap();
        for _ in 0..1000 {
            let x = env.sample_utilities();
            assert_eq!(x[0], x[1]);
            assert_ne!(x[0], x[2]);
        }
    }

    #[test]
    fn same_block_higher_score_always_wins() {
        let spec = InstanceSpec::new(
            ScoreVector::new(vec![0.3, 0.1, 0.0]).unwrap(),
            NoiseFamily::StdGaussian,
            CorrelationSpec::BlockRank(BlockPartition::new(vec![0, 0, 1]).unwrap()),
        )
        .unwrap();
        let mut env = Environment::new(spec, 3).unwrap();
        for _ in 0..10_000 {
            assert_eq!(env.play(&[1, 0]).unwrap(), 0);
        }
    }

    #[test]
    fn planar_antipodal_draws_negate() {
        let spec = InstanceSpec::new(
            ScoreVector::new(vec![0.4, -1.0]).unwrap(),
            NoiseFamily::StdGaussian,
            CorrelationSpec::planar(vec![0.0, std::f64::consts::PI]).unwrap(),
        )
        .unwrap();
        let mut env = Environment::new(spec, 11).unwrap();
        for _ in 0..10_000 {
            let x = env.sample_utilities();
            assert!((x[0] - 0.4 + x[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centred_families_have_mean_score() {
        let draws = 1_000_000;
        for (family, sd) in [
            (NoiseFamily::StdGaussian, 1.0),
            (NoiseFamily::Uniform { half_width: 1.5 }, 1.5 / 3f64.sqrt()),
            (NoiseFamily::Exponential { rate: 2.0 }, 0.5),
        ] {
            let spec = InstanceSpec::independent(vec![0.7, -0.2], family).unwrap();
            let mut env = Environment::new(spec, 5).unwrap();
            let mut sums = [0.0; 2];
            for _ in 0..draws {
                let x = env.sample_utilities();
                sums[0] += x[0];
                sums[1] += x[1];
            }
            let tol = 4.0 * sd / (draws as f64).sqrt();
            assert!((sums[0] / draws as f64 - 0.7).abs() < tol, "{family:?}");
            assert!((sums[1] / draws as f64 + 0.2).abs() < tol, "{family:?}");
        }
    }

    #[test]
    fn mnl_closed_form() {
        let flat = ScoreVector::new(vec![0.0; 3]).unwrap();
        for p in mnl_win_probs(&flat, &[0, 1, 2]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let two = ScoreVector::new(vec![2f64.ln(), 0.0]).unwrap();
        let p = mnl_win_probs(&two, &[0, 1]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        let dummy = ScoreVector::new(vec![0.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(mnl_win_probs(&dummy, &[0, 1]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            mnl_win_probs(&dummy, &[1]),
            Err(Error::DegenerateSubset)
        ));
    }

    #[test]
    fn gumbel_duel_matches_softmax() {
        let mut env = Environment::new(gumbel(vec![2f64.ln(), 0.0]), 21).unwrap();
        let m = 1_000_000;
        let wins = (0..m).filter(|_| env.play(&[0, 1]).unwrap() == 0).count();
        assert!((wins as f64 / m as f64 - 2.0 / 3.0).abs() < 0.003);
        assert_eq!(env.query_count(), m as u64);
    }

    /// Simpson quadrature of the standard normal density on `[0, x]`.
    fn phi_integral(x: f64) -> f64 {
        let n = 2000;
        let h = x / n as f64;
        let f = |y: f64| (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_pairwise_values() {
        assert_eq!(gaussian_pairwise_prob(0.3, 0.3), 0.5);
        let expected = 0.5 + phi_integral(1.0 / 2f64.sqrt());
        assert!((expected - 0.760_25).abs() < 1e-5);
        assert!((gaussian_pairwise_prob(1.0, 0.0) - expected).abs() < 1e-12);
        assert!(gaussian_pairwise_prob(10.0, 0.0) >= 0.999_999_9);
        for d in [0.25, 0.5, 2.0, -1.3] {
            let via_quad = 0.5 + phi_integral(d / 2f64.sqrt());
            assert!(
                (gaussian_pairwise_prob(d, 0.0) - via_quad).abs() < 1e-12,
                "{d}"
            );
        }
    }

    #[test]
    fn small_subset_law_closed_forms() {
        let indep = |i: usize, j: usize| f64::from(u8::from(i == j));
        let pair = gaussian_small_subset_law(&[0.7, 0.2], indep).unwrap();
        assert!((pair[0] - gaussian_pairwise_prob(0.7, 0.2)).abs() < 1e-15);
        let tie = gaussian_small_subset_law(&[0.3, 0.3, 0.3], indep).unwrap();
        for p in tie {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        // two members sharing their noise: the difference is deterministic
        let shared = |i: usize, j: usize| if i == j || i + j == 1 { 1.0 } else { 0.0 };
        assert!(gaussian_small_subset_law(&[0.0, 0.1, 0.2], shared).is_none());
        assert!(gaussian_small_subset_law(&[0.0, f64::NEG_INFINITY], indep).is_none());
        assert!(gaussian_small_subset_law(&[0.0; 4], indep).is_none());
    }

    #[test]
    fn small_subset_law_matches_simulation() {
        let p = BlockPartition::new(vec![0, 0, 1, 1, 2]).unwrap();
        let spec = InstanceSpec::new(
            ScoreVector::new(vec![0.5, 0.45, 0.3, 0.0, 0.2]).unwrap(),
            NoiseFamily::StdGaussian,
            CorrelationSpec::noisy_block(p, 0.02, 0.01).unwrap(),
        )
        .unwrap();
        let env = Environment::new(spec.clone(), 4).unwrap();
        // nearly identical within-block draws make some utility differences
        // almost collinear
        let tight = InstanceSpec::new(
            spec.scores().clone(),
            NoiseFamily::StdGaussian,
            CorrelationSpec::noisy_block(
                BlockPartition::new(vec![0, 0, 1, 1, 2]).unwrap(),
                0.0,
                1e-4,
            )
            .unwrap(),
        )
        .unwrap();
        let tight_env = Environment::new(tight, 5).unwrap();
        for env in [&env, &tight_env] {
            for subset in [[0, 1, 2], [0, 2, 4], [1, 3, 4], [2, 3, 0]] {
                let law = env.small_subset_law(&subset).unwrap();
                let mc = env.estimate_win_probs(&subset, 1_000_000).unwrap();
                for (a, b) in law.iter().zip(&mc.probs) {
                    assert!(
                        (a - b).abs() < 0.004,
                        "{subset:?}: {law:?} vs {:?}",
                        mc.probs
                    );
                }
            }
        }
    }

    #[test]
    fn batched_counts_follow_the_law() {
        let spec =
            InstanceSpec::independent(vec![0.4, 0.0, 0.1], NoiseFamily::StdGaussian).unwrap();
        let mut env = Environment::new(spec, 9).unwrap();
        let law = env.small_subset_law(&[0, 1, 2]).unwrap();
        let mut counts = [0u64; 3];
        env.play_counts(&[0, 1, 2], 1_000_000, &mut counts).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 1_000_000);
        assert_eq!(env.query_count(), 1_000_000);
        for (c, p) in counts.iter().zip(&law) {
            assert!((*c as f64 / 1e6 - p).abs() < 0.004);
        }
        // exact block-rank triples with a shared block fall back to play by play
        let blocks = InstanceSpec::new(
            ScoreVector::new(vec![0.4, 0.0, 0.1]).unwrap(),
            NoiseFamily::StdGaussian,
            CorrelationSpec::BlockRank(BlockPartition::new(vec![0, 0, 1]).unwrap()),
        )
        .unwrap();
        let mut env = Environment::new(blocks, 9).unwrap();
        assert!(env.small_subset_law(&[0, 1, 2]).is_none());
        let mut counts = [0u64; 3];
        env.play_counts(&[0, 1, 2], 10_000, &mut counts).unwrap();
        assert_eq!(counts[1], 0);
    }

    #[test]
    fn estimate_is_read_only() {
        let mut env = Environment::new(gumbel(vec![0.0; 4]), 9).unwrap();
        env.play(&[0, 1]).unwrap();
        let est = env.estimate_win_probs(&[0, 1, 2, 3], 1_000_000).unwrap();
        assert_eq!(env.query_count(), 1);
        assert_eq!(est.samples, 1_000_000);
        assert!((est.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for p in &est.probs {
            assert!((p - 0.25).abs() < 0.002);
        }
        let again = env.estimate_win_probs(&[0, 1, 2, 3], 1_000_000).unwrap();
        assert_eq!(est, again);
        assert!(env.estimate_win_probs(&[0], 0).is_err());
        assert!(env.estimate_win_probs(&[0, 0], 10).is_err());
    }

    #[test]
    fn gaussian_estimate_matches_pairwise_law() {
        let spec = InstanceSpec::independent(vec![1.0, 0.0], NoiseFamily::StdGaussian).unwrap();
        let env = Environment::new(spec, 4).unwrap();
        let est = env.estimate_win_probs(&[0, 1], 1_000_000).unwrap();
        assert!((est.probs[0] - 0.7602).abs() < 0.002);
        assert!((est.probs[0] - gaussian_pairwise_prob(1.0, 0.0)).abs() < 0.002);
    }

    #[test]
    fn seeds_reproduce_winner_sequences() {
        let spec = gumbel(vec![0.1, 0.0, -0.2]);
        let mut a = Environment::new(spec.clone(), 77).unwrap();
        let mut b = Environment::new(spec, 77).unwrap();
        for _ in 0..1000 {
            assert_eq!(a.play(&[2, 0, 1]).unwrap(), b.play(&[2, 0, 1]).unwrap());
        }
    }

    #[test]
    fn analytic_coverage() {
        let g = gumbel(vec![0.0, 0.0]);
        assert_eq!(analytic_win_probs(&g, &[0, 1]).unwrap(), vec![0.5, 0.5]);
        let n = InstanceSpec::independent(vec![0.0, 0.0, 0.0], NoiseFamily::StdGaussian).unwrap();
        assert_eq!(analytic_win_probs(&n, &[0, 2]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(
            analytic_win_probs(&n, &[0, 1, 2]),
            Err(Error::Configuration(_))
        ));
        assert_eq!(analytic_win_probs(&n, &[1]).unwrap(), vec![1.0]);
    }

    #[test]
    fn epsilon_bar_mnl_constant_ratio() {
        let spec = gumbel(vec![2f64.ln(), 0.0, 0.0]);
        let bar = epsilon_bar(&spec, 0.1, ProbOracle::Analytic, DEFAULT_MAX_ENUMERATION).unwrap();
        assert!((bar.value - 2.0).abs() < 1e-12);
        assert!(bar.subset.contains(&0));
        for e in bar_entries(&spec, 0.1, ProbOracle::Analytic, 10).unwrap() {
            assert!((e.ratio - 2.0).abs() < 1e-12);
            assert!(e.ratio > 1.0 / (e.subset.len() as f64 * e.prob_arm));
        }
    }

    #[test]
    fn epsilon_bar_errors() {
        let flat = gumbel(vec![0.0, 0.0]);
        assert!(matches!(
            epsilon_bar(&flat, 0.1, ProbOracle::Analytic, 10),
            Err(Error::NoSuboptimalArm)
        ));
        let big = gumbel(vec![0.0; 12]);
        assert!(matches!(
            epsilon_bar(&big, 0.1, ProbOracle::Analytic, 10),
            Err(Error::Domain(_))
        ));
        // same-block dominated arm never wins: every ratio is infinite
        let blocked = InstanceSpec::new(
            ScoreVector::new(vec![1.0, 0.0]).unwrap(),
            NoiseFamily::Gumbel01,
            CorrelationSpec::BlockRank(BlockPartition::new(vec![0, 0]).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            epsilon_bar(&blocked, 0.1, ProbOracle::Analytic, 10),
            Err(Error::InfiniteBar)
        ));
    }

    #[test]
    fn epsilon_bar_monte_carlo_agrees() {
        let spec = gumbel(vec![2f64.ln(), 0.0, 0.0]);
        let bar = epsilon_bar(
            &spec,
            0.1,
            ProbOracle::MonteCarlo {
                samples: 200_000,
                seed: 1,
            },
            10,
        )
        .unwrap();
        assert!((bar.value - 2.0).abs() < 0.05, "{}", bar.value);
    }
}
