use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use blockrank::correlation::{planar_angles, planar_instance, sector_win_probs};
use blockrank::harness::{emit, OutputFormat};
use blockrank::instances::CATALOG;
use blockrank::{
    analytic_win_probs, preprocess, run_plan, AlgoConfig, Environment, Error, ExperimentPlan,
};
use serde::Serialize;

use crate::source::{CatalogParams, InstanceArgs};
use crate::{CliError, Format, GlobalArgs, Mode};

/// Seed used when `--seed` is absent.
const DEFAULT_SEED: u64 = 0;

fn seed(global: &GlobalArgs) -> u64 {
    global.seed.unwrap_or(DEFAULT_SEED)
}

/// Writes the primary output to `--out`, or to stdout.
fn deliver(global: &GlobalArgs, text: &str) -> Result<(), CliError> {
    match &global.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct WinProbRow {
    arm: usize,
    prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<f64>,
}

#[derive(Serialize)]
struct WinProbReport {
    instance: String,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    rows: Vec<WinProbRow>,
}

pub fn winprob(
    global: &GlobalArgs,
    instance: &InstanceArgs,
    subset: &[usize],
    mode: Mode,
) -> Result<(), CliError> {
    let entry = instance.load()?;
    let n = entry.num_arms();
    if let Some(&bad) = subset.iter().find(|&&a| a == 0 || a > n) {
        return Err(CliError::Usage(format!(
            "subset arm {bad} out of range 1..={n}"
        )));
    }
    let members: Vec<usize> = subset.iter().map(|a| a - 1).collect();
    let report = match mode {
        Mode::Analytic => {
            let probs = analytic_win_probs(&entry.spec, &members).map_err(|e| match e {
                Error::Configuration(msg) => CliError::Capability(format!("{msg} via --mode mc")),
                other => other.into(),
            })?;
            WinProbReport {
                instance: entry.name.clone(),
                mode: "analytic",
                samples: None,
                rows: subset
                    .iter()
                    .zip(probs)
                    .map(|(&arm, prob)| WinProbRow {
                        arm,
                        prob,
                        stderr: None,
                    })
                    .collect(),
            }
        }
        Mode::Mc => {
            let env = Environment::new(entry.spec.clone(), seed(global))?;
            let est = env.estimate_win_probs(&members, global.samples)?;
            WinProbReport {
                instance: entry.name.clone(),
                mode: "mc",
                samples: Some(est.samples),
                rows: subset
                    .iter()
                    .zip(est.probs.iter().zip(&est.stderr))
                    .map(|(&arm, (&prob, &se))| WinProbRow {
                        arm,
                        prob,
                        stderr: Some(se),
                    })
                    .collect(),
            }
        }
    };
    let text = match global.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("arm,prob,stderr\n");
            for row in &report.rows {
                let se = row.stderr.map(|v| format!("{v:.6}")).unwrap_or_default();
                writeln!(s, "{},{:.6},{se}", row.arm, row.prob).unwrap();
            }
            s
        }
    };
    deliver(global, &text)
}

#[derive(Serialize)]
struct ImpossibilityReport {
    k: usize,
    epsilon: f64,
    samples: usize,
    analytic: Vec<f64>,
    monte_carlo: Vec<f64>,
    stderr: Vec<f64>,
    /// `Pr(k | [k]) - Pr(1 | [k])` from the Monte Carlo estimate.
    gap: f64,
}

pub fn impossibility(global: &GlobalArgs, k: usize, epsilon: f64) -> Result<(), CliError> {
    let analytic = sector_win_probs(&planar_angles(k)?);
    let env = Environment::new(planar_instance(k, 0.0, epsilon)?, seed(global))?;
    let all: Vec<usize> = (0..k).collect();
    let est = env.estimate_win_probs(&all, global.samples)?;
    let report = ImpossibilityReport {
        k,
        epsilon,
        samples: est.samples,
        gap: est.probs[k - 1] - est.probs[0],
        analytic,
        monte_carlo: est.probs,
        stderr: est.stderr,
    };
    let text = match global.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("arm,analytic,monte_carlo,stderr\n");
            for i in 0..k {
                writeln!(
                    s,
                    "{},{:.6},{:.6},{:.6}",
                    i + 1,
                    report.analytic[i],
                    report.monte_carlo[i],
                    report.stderr[i]
                )
                .unwrap();
            }
            writeln!(s, "gap,,{:.6},", report.gap).unwrap();
            s
        }
    };
    deliver(global, &text)
}

fn default_out(format: Format) -> PathBuf {
    match format {
        Format::Csv => PathBuf::from("results.csv"),
        Format::Json => PathBuf::from("results.json"),
    }
}

pub fn load_plan(path: &Path) -> Result<ExperimentPlan, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let plan: ExperimentPlan = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
    plan.validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(plan)
}

pub fn run(global: &GlobalArgs, config: &Path) -> Result<(), CliError> {
    let mut plan = load_plan(config)?;
    if let Some(seed) = global.seed {
        plan.master_seed = seed;
    }
    if global.workers == Some(0) {
        return Err(CliError::Usage("--workers must be >= 1".into()));
    }
    let results = run_plan(&plan, global.workers)?;
    let out = global
        .out
        .clone()
        .unwrap_or_else(|| default_out(global.format));
    let format = match global.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let written = emit(&results, format, &out).map_err(|e| CliError::Usage(e.to_string()))?;

    println!(
        "{:<24} {:<18} {:>3} {:>3} {:>3} {:>6} {:>6} {:>9} {:>8} {:>14}",
        "instance",
        "algorithm",
        "n",
        "r",
        "k",
        "eps",
        "delta",
        "successes",
        "wilson",
        "mean_samples"
    );
    for c in &results.cells {
        match &c.error {
            Some(err) => println!(
                "{:<24} {:<18} {:>3} {:>3} {:>3} {:>6} {:>6} error: {err}",
                c.instance, c.algorithm, c.n, c.r, c.k, c.epsilon, c.delta
            ),
            None => println!(
                "{:<24} {:<18} {:>3} {:>3} {:>3} {:>6} {:>6} {:>9} {:>8.4} {:>14.1}",
                c.instance,
                c.algorithm,
                c.n,
                c.r,
                c.k,
                c.epsilon,
                c.delta,
                format!("{}/{}", c.successes, c.replications),
                c.wilson_lower_bound,
                c.mean_samples
            ),
        }
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    if results.has_errors() {
        let failed = results.cells.iter().filter(|c| c.error.is_some()).count();
        return Err(CliError::Failure(format!("{failed} cell(s) failed")));
    }
    Ok(())
}

pub fn catalog(
    global: &GlobalArgs,
    name: Option<&str>,
    params: &CatalogParams,
) -> Result<(), CliError> {
    match name {
        None => {
            let mut s = String::new();
            for (name, about) in CATALOG {
                writeln!(s, "{name:<20} {about}").unwrap();
            }
            deliver(global, &s)
        }
        Some(name) => {
            let entry = params.request(name)?.build()?;
            deliver(global, &to_json(&entry))
        }
    }
}

#[derive(Serialize)]
struct PreprocessCheck {
    instance: String,
    n: usize,
    delta: f64,
    t_per_triple: u64,
    plays: u64,
    flagged: Vec<usize>,
    survivors: Vec<usize>,
    best_arm: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    block_guarantee: Option<bool>,
}

pub fn preprocess_check(
    global: &GlobalArgs,
    instance: &InstanceArgs,
    delta: f64,
    preprocess_const: Option<f64>,
) -> Result<(), CliError> {
    let entry = instance.load()?;
    let mut cfg = AlgoConfig::default();
    if let Some(c) = preprocess_const {
        cfg.preprocess_const = c;
    }
    cfg.validate()?;
    let n = entry.num_arms();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::Usage(format!(
            "--delta {delta} must lie in (0, 1)"
        )));
    }
    let mut env = Environment::new(entry.spec.clone(), seed(global))?;
    let report = preprocess(&mut env, n, delta, &cfg)?;
    let best = entry.best_arm();
    let check = PreprocessCheck {
        instance: entry.name.clone(),
        n,
        delta,
        t_per_triple: report.t_per_triple,
        plays: report.plays_used,
        flagged: (0..n).filter(|&a| report.flags[a]).map(|a| a + 1).collect(),
        survivors: report.survivors.iter().map(|a| a + 1).collect(),
        best_arm: best + 1,
        block_guarantee: entry
            .spec
            .correlation()
            .partition()
            .map(|p| report.satisfies_block_guarantee(best, p)),
    };
    let list = |v: &[usize]| {
        v.iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let text = match global.format {
        Format::Json => to_json(&check),
        Format::Csv => {
            let mut s = String::from("field,value\n");
            writeln!(s, "instance,{}", check.instance).unwrap();
            writeln!(s, "n,{}", check.n).unwrap();
            writeln!(s, "delta,{}", check.delta).unwrap();
            writeln!(s, "t_per_triple,{}", check.t_per_triple).unwrap();
            writeln!(s, "plays,{}", check.plays).unwrap();
            writeln!(s, "flagged,{}", list(&check.flagged)).unwrap();
            writeln!(s, "survivors,{}", list(&check.survivors)).unwrap();
            writeln!(s, "best_arm,{}", check.best_arm).unwrap();
            if let Some(g) = check.block_guarantee {
                writeln!(s, "block_guarantee,{g}").unwrap();
            }
            s
        }
    };
    deliver(global, &text)
}
