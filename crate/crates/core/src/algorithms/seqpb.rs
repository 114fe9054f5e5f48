use serde::{Deserialize, Serialize};

use crate::choice::{ChoiceEnv, PacParams};
use crate::error::{Error, Result};

use super::preprocess::preprocess;
use super::{AlgoConfig, PhaseSummary, RunResult};

/// One tournament round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRound {
    pub epsilon: f64,
    pub delta: f64,
    /// Plays per full-size group.
    pub plays_per_group: u64,
    pub group_size: usize,
    /// Plays spent in the round, across all groups.
    pub plays: u64,
    /// Candidates remaining after the round.
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeqPbSchedule {
    pub rounds: Vec<ScheduleRound>,
}

/// How many plays a group receives in a round.
#[derive(Debug, Clone, Copy)]
enum RoundWidth {
    /// Scales with the group size.
    GroupSize,
    /// Scales with a known block rank, whatever the group size.
    Rank(usize),
}

/// `ceil(seqpb_const * w / (c^2 eps^2) * ln(w / delta))`, at least 1.
fn round_plays(width: usize, epsilon: f64, delta: f64, cfg: &AlgoConfig) -> u64 {
    let w = width as f64;
    let t = cfg.seqpb_const * w / (cfg.c * cfg.c * epsilon * epsilon) * (w / delta).ln();
    (t.ceil() as u64).max(1)
}

fn tournament<E: ChoiceEnv + ?Sized>(
    env: &mut E,
    candidates: &[usize],
    k: usize,
    pac: PacParams,
    cfg: &AlgoConfig,
    width: RoundWidth,
) -> Result<(usize, SeqPbSchedule)> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    if k < 2 {
        return Err(Error::domain(format!("group size k = {k} must be >= 2")));
    }
    let mut current = candidates.to_vec();
    let mut schedule = SeqPbSchedule::default();
    let mut round = 0u32;
    while current.len() > 1 {
        round += 1;
        let eps = cfg.round_epsilon(pac.epsilon(), round);
        let delta = cfg.round_delta(pac.delta(), round);
        let group_size = k.min(current.len());
        let budget = |g: usize| match width {
            RoundWidth::GroupSize => round_plays(g, eps, delta, cfg),
            RoundWidth::Rank(r) => round_plays(r, eps, delta, cfg),
        };
        let before = env.query_count();
        let mut next = Vec::with_capacity(current.len().div_ceil(group_size));
        for group in current.chunks(group_size) {
            if group.len() == 1 {
                next.push(group[0]);
                continue;
            }
            let t = budget(group.len());
            let mut wins = vec![0u64; group.len()];
            env.play_counts(group, t, &mut wins)?;
            // most wins; ties go to the lowest arm index
            let (best, _) =
                group
                    .iter()
                    .zip(&wins)
                    .fold((usize::MAX, 0u64), |(ba, bw), (&a, &w)| {
                        if w > bw || (w == bw && a < ba) {
                            (a, w)
                        } else {
                            (ba, bw)
                        }
                    });
            next.push(best);
        }
        schedule.rounds.push(ScheduleRound {
            epsilon: eps,
            delta,
            plays_per_group: budget(group_size),
            group_size,
            plays: env.query_count() - before,
            survivors: next.len(),
        });
        current = next;
    }
    Ok((current[0], schedule))
}

fn tournament_result(recommended: usize, schedule: SeqPbSchedule, name: &str) -> RunResult {
    let plays = schedule.rounds.iter().map(|r| r.plays).sum();
    RunResult {
        recommended,
        samples: plays,
        phases: vec![PhaseSummary {
            name: name.to_owned(),
            plays,
            survivors: 1,
        }],
        schedule: Some(schedule),
        succeeded: None,
    }
}

/// Sequential group tournament.
///
/// Each round splits the candidates (in the given order) into groups of `k`,
/// plays every group of two or more `t` times and keeps its most frequent
/// winner; a trailing singleton advances unplayed. Round `l` uses accuracy
/// `eps_l`, confidence `delta_l` and
/// `t = ceil(seqpb_const * g / (c^2 eps_l^2) * ln(g / delta_l))` for a group
/// of size `g`.
pub fn seq_pb<E: ChoiceEnv + ?Sized>(
    env: &mut E,
    candidates: &[usize],
    k: usize,
    pac: PacParams,
    cfg: &AlgoConfig,
) -> Result<RunResult> {
    let (best, schedule) = tournament(env, candidates, k, pac, cfg, RoundWidth::GroupSize)?;
    Ok(tournament_result(best, schedule, "seq_pb"))
}

/// Tournament over all `n` arms whose round budget scales with a known block
/// rank `r` instead of the group size.
pub fn rank_aware_seq_pb<E: ChoiceEnv + ?Sized>(
    env: &mut E,
    n: usize,
    k: usize,
    r: usize,
    pac: PacParams,
    cfg: &AlgoConfig,
) -> Result<RunResult> {
    if r < 1 || r > n {
        return Err(Error::domain(format!(
            "block rank r = {r} must lie in 1..={n}"
        )));
    }
    let arms: Vec<usize> = (0..n).collect();
    let (best, schedule) = tournament(env, &arms, k, pac, cfg, RoundWidth::Rank(r))?;
    Ok(tournament_result(best, schedule, "rank_aware_seq_pb"))
}

/// Triple screening with confidence `delta/2`, then [`seq_pb`] on the
/// survivors with `(epsilon, delta/2)`.
///
/// Requires `k > 2`. If screening flags every arm (only possible outside its
/// success event) the tournament runs on all arms.
pub fn blockrank_pb<E: ChoiceEnv + ?Sized>(
    env: &mut E,
    n: usize,
    k: usize,
    pac: PacParams,
    cfg: &AlgoConfig,
) -> Result<RunResult> {
    if k <= 2 {
        return Err(Error::config(format!(
            "blockrank_pb needs subsets larger than pairs, got k = {k}"
        )));
    }
    if n == 0 {
        return Err(Error::EmptyCandidate);
    }
    let half = PacParams::new(pac.epsilon(), pac.delta() / 2.0)?;
    let report = preprocess(env, n, half.delta(), cfg)?;
    let survivors = if report.survivors.is_empty() {
        (0..n).collect()
    } else {
        report.survivors.clone()
    };
    let group = k.min(survivors.len()).max(2);
    let (best, schedule) = tournament(env, &survivors, group, half, cfg, RoundWidth::GroupSize)?;
    let mut result = tournament_result(best, schedule, "seq_pb");
    result.phases.insert(
        0,
        PhaseSummary {
            name: "preprocess".into(),
            plays: report.plays_used,
            survivors: report.survivors.len(),
        },
    );
    result.samples += report.plays_used;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{Environment, InstanceSpec, NoiseFamily};

    fn pac() -> PacParams {
        PacParams::new(0.3, 0.1).unwrap()
    }

    fn gaussian_env(scores: Vec<f64>, seed: u64) -> Environment {
        Environment::new(
            InstanceSpec::independent(scores, NoiseFamily::StdGaussian).unwrap(),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn single_candidate_is_free() {
        let mut env = gaussian_env(vec![0.0, 1.0], 1);
        let r = seq_pb(&mut env, &[1], 4, pac(), &AlgoConfig::default()).unwrap();
        assert_eq!(r.recommended, 1);
        assert_eq!(r.samples, 0);
        assert_eq!(env.query_count(), 0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut env = gaussian_env(vec![0.0, 1.0], 1);
        let cfg = AlgoConfig::default();
        assert!(matches!(
            seq_pb(&mut env, &[], 4, pac(), &cfg),
            Err(Error::EmptyCandidate)
        ));
        assert!(seq_pb(&mut env, &[0, 1], 1, pac(), &cfg).is_err());
        assert!(matches!(
            rank_aware_seq_pb(&mut env, 2, 2, 0, pac(), &cfg),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rank_aware_seq_pb(&mut env, 2, 2, 3, pac(), &cfg),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            blockrank_pb(&mut env, 2, 2, pac(), &cfg),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn schedule_shape_and_accounting() {
        let mut env = gaussian_env(vec![0.5, 0.0, 0.0, 0.0, 0.1, 0.2, 0.0, 0.0, 0.0, 0.0], 3);
        let cfg = AlgoConfig {
            seqpb_const: 0.05,
            ..AlgoConfig::default()
        };
        let arms: Vec<usize> = (0..10).collect();
        let r = seq_pb(&mut env, &arms, 3, pac(), &cfg).unwrap();
        assert_eq!(r.samples, env.query_count());
        let sched = r.schedule.unwrap();
        // 10 -> 4 -> 2 -> 1
        let survivors: Vec<usize> = sched.rounds.iter().map(|r| r.survivors).collect();
        assert_eq!(survivors, vec![4, 2, 1]);
        let bound = (10f64.ln() / 3f64.ln()).ceil() as usize + 1;
        assert!(sched.rounds.len() <= bound);
        let eps_sum: f64 = sched.rounds.iter().map(|r| r.epsilon).sum();
        let delta_sum: f64 = sched.rounds.iter().map(|r| r.delta).sum();
        assert!(eps_sum <= 0.3 && delta_sum <= 0.1);
        for pair in sched.rounds.windows(2) {
            assert!(pair[1].epsilon < pair[0].epsilon);
        }
        // round 1: three groups of 3 and a free singleton
        let first = &sched.rounds[0];
        assert_eq!(first.plays, 3 * first.plays_per_group);
        assert_eq!(first.plays_per_group, round_plays(3, 0.3 / 4.0, 0.05, &cfg));
    }

    #[test]
    fn rank_budget_ignores_group_size() {
        let cfg = AlgoConfig::default();
        let mut a = gaussian_env(vec![0.5, 0.0, 0.0, 0.0], 1);
        let mut b = gaussian_env(vec![0.5, 0.0, 0.0, 0.0], 1);
        let seq = seq_pb(&mut a, &[0, 1, 2, 3], 4, pac(), &cfg).unwrap();
        let same = rank_aware_seq_pb(&mut b, 4, 4, 4, pac(), &cfg).unwrap();
        assert_eq!(seq.samples, same.samples);
        assert_eq!(seq.recommended, same.recommended);

        let mut c = gaussian_env(vec![0.5, 0.0, 0.0, 0.0], 1);
        let low = rank_aware_seq_pb(&mut c, 4, 4, 2, pac(), &cfg).unwrap();
        let per_group_low = low.schedule.unwrap().rounds[0].plays_per_group;
        let per_group_seq = seq.schedule.unwrap().rounds[0].plays_per_group;
        assert!(per_group_low < per_group_seq);
    }

    #[test]
    fn seq_pb_pac_on_independent_gaussian() {
        let cfg = AlgoConfig::default();
        let mut hits = 0;
        for seed in 0..200 {
            let mut env = gaussian_env(vec![0.5, 0.0, 0.0, 0.0], seed);
            let r = seq_pb(&mut env, &[0, 1, 2, 3], 4, pac(), &cfg).unwrap();
            if r.recommended == 0 {
                hits += 1;
            }
        }
        assert!(hits >= 180, "{hits}/200");
    }
}
