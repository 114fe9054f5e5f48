use crate::choice::{ChoiceEnv, PacParams};
use crate::error::{Error, Result};

use super::{AlgoConfig, PhaseSummary, RunResult};

/// `ceil(seqpb_const * 2 / (c^2 eps^2) * ln(2n / delta))`, at least 1.
pub fn duel_plays(n: usize, pac: PacParams, cfg: &AlgoConfig) -> u64 {
    let eps = pac.epsilon();
    let t =
        cfg.seqpb_const * 2.0 / (cfg.c * cfg.c * eps * eps) * (2.0 * n as f64 / pac.delta()).ln();
    (t.ceil() as u64).max(1)
}

/// Pairwise knockout over `0..n`.
///
/// Arm 0 starts as the incumbent; each challenger in index order duels it
/// [`duel_plays`] times and takes over only with a strict majority.
pub fn dueling_elimination<E: ChoiceEnv + ?Sized>(
    env: &mut E,
    n: usize,
    pac: PacParams,
    cfg: &AlgoConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::domain(format!("dueling needs n >= 2 arms, got {n}")));
    }
    if n > env.num_arms() {
        return Err(Error::domain(format!(
            "asked to duel {n} arms of a {}-arm environment",
            env.num_arms()
        )));
    }
    let t = duel_plays(n, pac, cfg);
    let before = env.query_count();
    let mut incumbent = 0;
    for challenger in 1..n {
        let pair = [incumbent, challenger];
        let mut wins = [0u64; 2];
        env.play_counts(&pair, t, &mut wins)?;
        if 2 * wins[1] > t {
            incumbent = challenger;
        }
    }
    let plays = env.query_count() - before;
    Ok(RunResult {
        recommended: incumbent,
        samples: plays,
        phases: vec![PhaseSummary {
            name: "duels".into(),
            plays,
            survivors: 1,
        }],
        schedule: None,
        succeeded: None,
    })
}
