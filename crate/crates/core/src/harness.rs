//! Replicated experiments over instance × algorithm × (epsilon, delta) grids,
//! success statistics, scaling fits and CSV/JSON emission.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    blockrank_pb, dueling_elimination, rank_aware_seq_pb, seq_pb, AlgoConfig, RunResult,
};
use crate::choice::{Environment, InstanceSpec, PacParams};
use crate::error::{Error, Result};
use crate::instances::{CatalogRequest, InstanceCatalogEntry};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959964;

/// Exact header of the per-replication CSV.
pub const REPLICATION_HEADER: &str =
    "instance,algorithm,n,r,k,epsilon,delta,replication,success,samples,recommended_arm,seed";

/// An instance of a plan: a catalog request or an inline spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanInstance {
    /// Label used in results; defaults to the generator name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<InstanceSpec>,
}

impl PlanInstance {
    pub fn from_catalog(request: CatalogRequest) -> Self {
        Self {
            name: None,
            catalog: Some(request),
            spec: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn build(&self) -> Result<InstanceCatalogEntry> {
        match (&self.catalog, &self.spec) {
            (Some(req), None) => {
                let mut entry = req.build()?;
                if let Some(name) = &self.name {
                    entry.name = name.clone();
                }
                Ok(entry)
            }
            (None, Some(spec)) => Ok(InstanceCatalogEntry {
                name: self.name.clone().unwrap_or_else(|| "inline".into()),
                provenance: "inline".into(),
                spec: spec.clone(),
            }),
            _ => Err(Error::config(
                "each instance needs exactly one of `catalog` or `spec`",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmKind {
    BlockrankPb {
        k: usize,
    },
    SeqPb {
        k: usize,
    },
    /// `r` defaults to the instance's block rank.
    RankAwareSeqPb {
        k: usize,
        #[serde(default)]
        r: Option<usize>,
    },
    DuelingElimination,
}

impl AlgorithmKind {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmKind::BlockrankPb { .. } => "blockrank_pb",
            AlgorithmKind::SeqPb { .. } => "seq_pb",
            AlgorithmKind::RankAwareSeqPb { .. } => "rank_aware_seq_pb",
            AlgorithmKind::DuelingElimination => "dueling_elimination",
        }
    }

    /// Largest subset the algorithm plays.
    pub fn subset_size(&self) -> usize {
        match *self {
            AlgorithmKind::BlockrankPb { k }
            | AlgorithmKind::SeqPb { k }
            | AlgorithmKind::RankAwareSeqPb { k, .. } => k,
            AlgorithmKind::DuelingElimination => 2,
        }
    }

    pub fn run(
        &self,
        env: &mut Environment,
        entry: &InstanceCatalogEntry,
        pac: PacParams,
        cfg: &AlgoConfig,
    ) -> Result<RunResult> {
        let n = entry.num_arms();
        match *self {
            AlgorithmKind::BlockrankPb { k } => blockrank_pb(env, n, k, pac, cfg),
            AlgorithmKind::SeqPb { k } => {
                let arms: Vec<usize> = (0..n).collect();
                seq_pb(env, &arms, k, pac, cfg)
            }
            AlgorithmKind::RankAwareSeqPb { k, r } => {
                rank_aware_seq_pb(env, n, k, r.unwrap_or_else(|| entry.block_rank()), pac, cfg)
            }
            AlgorithmKind::DuelingElimination => dueling_elimination(env, n, pac, cfg),
        }
    }

    /// Argument checks that would make every replication fail.
    fn check(&self, entry: &InstanceCatalogEntry) -> Result<()> {
        let n = entry.num_arms();
        match *self {
            AlgorithmKind::BlockrankPb { k } if k <= 2 => Err(Error::config(format!(
                "blockrank_pb needs k > 2, got k = {k}"
            ))),
            AlgorithmKind::SeqPb { k } | AlgorithmKind::RankAwareSeqPb { k, .. } if k < 2 => Err(
                Error::config(format!("{} needs k >= 2, got k = {k}", self.label())),
            ),
            AlgorithmKind::RankAwareSeqPb { r: Some(r), .. } if r < 1 || r > n => Err(
                Error::domain(format!("block rank r = {r} must lie in 1..={n}")),
            ),
            AlgorithmKind::DuelingElimination if n < 2 => {
                Err(Error::domain("dueling needs at least two arms"))
            }
            _ => Ok(()),
        }
    }
}

/// An algorithm of a plan with an optional override of the plan's config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanAlgorithm {
    #[serde(flatten)]
    pub kind: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<AlgoConfig>,
}

impl From<AlgorithmKind> for PlanAlgorithm {
    fn from(kind: AlgorithmKind) -> Self {
        Self { kind, config: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub master_seed: u64,
    pub replications: usize,
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub instances: Vec<PlanInstance>,
    pub algorithms: Vec<PlanAlgorithm>,
    #[serde(default)]
    pub config: AlgoConfig,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::config("replications must be >= 1"));
        }
        for (field, values) in [("epsilons", &self.epsilons), ("deltas", &self.deltas)] {
            if values.is_empty() {
                return Err(Error::config(format!("{field} must not be empty")));
            }
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            if !(e > 0.0 && e <= 0.5) {
                return Err(Error::config(format!(
                    "epsilons[{i}] = {e} must lie in (0, 1/2]"
                )));
            }
        }
        for (i, &d) in self.deltas.iter().enumerate() {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::config(format!(
                    "deltas[{i}] = {d} must lie in (0, 1)"
                )));
            }
        }
        if self.instances.is_empty() {
            return Err(Error::config("instances must not be empty"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms must not be empty"));
        }
        self.config
            .validate()
            .map_err(|e| Error::config(format!("config: {e}")))?;
        for (i, a) in self.algorithms.iter().enumerate() {
            if let Some(cfg) = &a.config {
                cfg.validate()
                    .map_err(|e| Error::config(format!("algorithms[{i}].config: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.instances.len() * self.algorithms.len() * self.epsilons.len() * self.deltas.len()
    }
}

/// One replication, in the column order of [`REPLICATION_HEADER`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub instance: String,
    pub algorithm: String,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub replication: usize,
    /// 1 when the recommended arm is epsilon-best, else 0.
    pub success: u8,
    pub samples: u64,
    /// 1-based, like arm labels everywhere outside the library.
    pub recommended_arm: usize,
    pub seed: u64,
}

/// Aggregate of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub instance: String,
    pub algorithm: String,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub replications: usize,
    pub successes: usize,
    pub mean_samples: f64,
    pub stddev_samples: f64,
    pub wilson_lower_bound: f64,
    /// Mean plays outside the triple screening phase.
    pub mean_search_samples: f64,
    /// Set when the cell could not run; the statistics are then zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub replications: Vec<ReplicationRow>,
    pub cells: Vec<CellResult>,
}

impl ExperimentResults {
    pub fn has_errors(&self) -> bool {
        self.cells.iter().any(|c| c.error.is_some())
    }
}

/// Wilson score lower bound at [`WILSON_Z`]; 0 when `trials` is 0.
pub fn wilson_lower_bound(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = p + z2 / (2.0 * n);
    let spread = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).clamp(0.0, 1.0)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one replication, a function of its coordinates only.
pub fn replication_seed(master_seed: u64, cell: usize, replication: usize) -> u64 {
    splitmix(splitmix(splitmix(master_seed) ^ cell as u64) ^ replication as u64)
}

struct Cell {
    id: usize,
    entry: InstanceCatalogEntry,
    algorithm: AlgorithmKind,
    cfg: AlgoConfig,
    pac: PacParams,
    env: Option<Environment>,
    error: Option<String>,
}

impl Cell {
    fn row(&self, replication: usize, seed: u64, run: &RunResult) -> ReplicationRow {
        let best = self.entry.epsilon_best(self.pac.epsilon());
        ReplicationRow {
            instance: self.entry.name.clone(),
            algorithm: self.algorithm.label().into(),
            n: self.entry.num_arms(),
            r: self.entry.block_rank(),
            k: self.algorithm.subset_size(),
            epsilon: self.pac.epsilon(),
            delta: self.pac.delta(),
            replication,
            success: best.contains(&run.recommended) as u8,
            samples: run.samples,
            recommended_arm: run.recommended + 1,
            seed,
        }
    }

    fn error_result(&self, msg: String) -> CellResult {
        CellResult {
            instance: self.entry.name.clone(),
            algorithm: self.algorithm.label().into(),
            n: self.entry.num_arms(),
            r: self.entry.block_rank(),
            k: self.algorithm.subset_size(),
            epsilon: self.pac.epsilon(),
            delta: self.pac.delta(),
            replications: 0,
            successes: 0,
            mean_samples: 0.0,
            stddev_samples: 0.0,
            wilson_lower_bound: 0.0,
            mean_search_samples: 0.0,
            error: Some(msg),
        }
    }
}

fn build_cells(plan: &ExperimentPlan) -> Result<Vec<Cell>> {
    plan.validate()?;
    let mut entries = Vec::with_capacity(plan.instances.len());
    for (i, inst) in plan.instances.iter().enumerate() {
        let entry = inst
            .build()
            .map_err(|e| Error::config(format!("instances[{i}]: {e}")))?;
        entries.push(entry);
    }
    let mut cells = Vec::with_capacity(plan.num_cells());
    for entry in &entries {
        let base = Environment::new(entry.spec.clone(), 0);
        for alg in &plan.algorithms {
            for &eps in &plan.epsilons {
                for &delta in &plan.deltas {
                    let pac = PacParams::new(eps, delta)?;
                    let cfg = alg.config.unwrap_or(plan.config);
                    let check = base
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|_| alg.kind.check(entry).map_err(|e| e.to_string()));
                    cells.push(Cell {
                        id: cells.len(),
                        entry: entry.clone(),
                        algorithm: alg.kind,
                        cfg,
                        pac,
                        env: base.as_ref().ok().cloned(),
                        error: check.err(),
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Runs every cell of `plan` on a pool of `workers` threads (all cores when
/// `None`).
///
/// Results do not depend on the worker count or on scheduling order. A cell
/// whose algorithm rejects the instance yields an error [`CellResult`] and no
/// replication rows.
pub fn run_plan(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentResults> {
    let cells = build_cells(plan)?;
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .filter(|c| c.error.is_none())
        .flat_map(|c| (0..plan.replications).map(move |rep| (c.id, rep)))
        .collect();

    let run_job = |&(cell_id, rep): &(usize, usize)| -> (usize, Result<(ReplicationRow, u64)>) {
        let cell = &cells[cell_id];
        let seed = replication_seed(plan.master_seed, cell_id, rep);
        let mut env = cell
            .env
            .as_ref()
            .expect("runnable cells carry an environment")
            .reseeded(seed);
        let out = cell
            .algorithm
            .run(&mut env, &cell.entry, cell.pac, &cell.cfg)
            .map(|run| {
                let search = run.samples - run.phase_plays("preprocess");
                (cell.row(rep, seed, &run), search)
            });
        (cell_id, out)
    };

    let outputs: Vec<_> = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
            .install(|| jobs.par_iter().map(run_job).collect()),
        None => jobs.par_iter().map(run_job).collect(),
    };

    let mut per_cell: Vec<Vec<(ReplicationRow, u64)>> = vec![Vec::new(); cells.len()];
    let mut failures: BTreeMap<usize, String> = BTreeMap::new();
    for (cell_id, out) in outputs {
        match out {
            Ok(x) => per_cell[cell_id].push(x),
            Err(e) => {
                failures.entry(cell_id).or_insert_with(|| e.to_string());
            }
        }
    }

    let mut results = ExperimentResults::default();
    for (cell, done) in cells.iter().zip(per_cell) {
        if let Some(msg) = cell
            .error
            .clone()
            .or_else(|| failures.get(&cell.id).cloned())
        {
            results.cells.push(cell.error_result(msg));
            continue;
        }
        let rows: Vec<ReplicationRow> = done.iter().map(|(r, _)| r.clone()).collect();
        let mut agg = aggregate(&rows)
            .pop()
            .expect("a runnable cell has at least one replication");
        agg.mean_search_samples =
            done.iter().map(|(_, s)| *s as f64).sum::<f64>() / done.len() as f64;
        results.cells.push(agg);
        results.replications.extend(rows);
    }
    Ok(results)
}

/// Recomputes cell aggregates from replication rows, one per distinct
/// `(instance, algorithm, n, r, k, epsilon, delta)` in order of first
/// appearance. `mean_search_samples` is not recoverable from rows and is set
/// to `mean_samples`.
pub fn aggregate(rows: &[ReplicationRow]) -> Vec<CellResult> {
    let mut order: Vec<CellResult> = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let pos = order.iter().position(|c| {
            c.instance == row.instance
                && c.algorithm == row.algorithm
                && c.n == row.n
                && c.r == row.r
                && c.k == row.k
                && c.epsilon == row.epsilon
                && c.delta == row.delta
        });
        let pos = pos.unwrap_or_else(|| {
            order.push(CellResult {
                instance: row.instance.clone(),
                algorithm: row.algorithm.clone(),
                n: row.n,
                r: row.r,
                k: row.k,
                epsilon: row.epsilon,
                delta: row.delta,
                replications: 0,
                successes: 0,
                mean_samples: 0.0,
                stddev_samples: 0.0,
                wilson_lower_bound: 0.0,
                mean_search_samples: 0.0,
                error: None,
            });
            samples.push(Vec::new());
            order.len() - 1
        });
        order[pos].replications += 1;
        order[pos].successes += row.success as usize;
        samples[pos].push(row.samples as f64);
    }
    for (cell, s) in order.iter_mut().zip(&samples) {
        let m = s.len() as f64;
        let mean = s.iter().sum::<f64>() / m;
        let var = if s.len() > 1 {
            s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        cell.mean_samples = mean;
        cell.mean_search_samples = mean;
        cell.stddev_samples = var.sqrt();
        cell.wilson_lower_bound = wilson_lower_bound(cell.successes, cell.replications);
    }
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Where the cell summary goes for a CSV emission to `path`:
/// `runs.csv` → `runs.cells.csv`.
pub fn cells_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}.cells.csv"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

const CELL_HEADER: &[&str] = &[
    "instance",
    "algorithm",
    "n",
    "r",
    "k",
    "epsilon",
    "delta",
    "replications",
    "successes",
    "mean_samples",
    "stddev_samples",
    "wilson_lower_bound",
    "mean_search_samples",
    "error",
];

/// Writes `results` to `path` and returns every file written.
///
/// CSV writes the replication rows to `path` and the cells to
/// [`cells_path`]; JSON writes one object holding both lists.
pub fn emit(
    results: &ExperimentResults,
    format: OutputFormat,
    path: &Path,
) -> Result<Vec<PathBuf>> {
    match format {
        OutputFormat::Csv => {
            let header: Vec<&str> = REPLICATION_HEADER.split(',').collect();
            write_csv(path, &header, &results.replications)?;
            let cells = cells_path(path);
            write_csv(&cells, CELL_HEADER, &results.cells)?;
            Ok(vec![path.to_path_buf(), cells])
        }
        OutputFormat::Json => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, results).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            writeln!(w).map_err(io_err(path))?;
            w.flush().map_err(io_err(path))?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Reads results written by [`emit`].
pub fn read_results(format: OutputFormat, path: &Path) -> Result<ExperimentResults> {
    match format {
        OutputFormat::Csv => {
            let file = File::open(path).map_err(io_err(path))?;
            let mut r = csv::Reader::from_reader(BufReader::new(file));
            let header = r.headers().map_err(|e| csv_err(path, e))?;
            if header.iter().collect::<Vec<_>>().join(",") != REPLICATION_HEADER {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message: "unexpected replication header".into(),
                });
            }
            drop(r);
            Ok(ExperimentResults {
                replications: read_csv(path)?,
                cells: read_csv(&cells_path(path))?,
            })
        }
        OutputFormat::Json => {
            let file = File::open(path).map_err(io_err(path))?;
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAxis {
    R,
    N,
    InvEpsSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMetric {
    MeanSamples,
    /// Plays outside the triple screening phase.
    SearchSamples,
}

/// Metric against axis for one group of cells that agree on everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingGroup {
    pub algorithm: String,
    /// The fixed coordinates, e.g. `n=12 epsilon=0.3 delta=0.1`.
    pub fixed: String,
    /// `(axis value, metric)` sorted by axis; cells sharing an axis value are
    /// averaged.
    pub points: Vec<(f64, f64)>,
    /// Metric ratios between consecutive points.
    pub ratios: Vec<f64>,
    /// Least-squares slope of log metric against log axis.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub axis: ScalingAxis,
    pub metric: ScalingMetric,
    pub groups: Vec<ScalingGroup>,
}

/// Groups cells by algorithm and the coordinates other than `axis`, and fits
/// each group with at least two distinct axis values. Error cells are skipped.
pub fn scaling_fit(
    rows: &[CellResult],
    axis: ScalingAxis,
    metric: ScalingMetric,
) -> Result<ScalingFit> {
    let mut groups: BTreeMap<(String, String), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for c in rows.iter().filter(|c| c.error.is_none()) {
        let (x, fixed) = match axis {
            ScalingAxis::R => (
                c.r as f64,
                format!("n={} epsilon={} delta={}", c.n, c.epsilon, c.delta),
            ),
            ScalingAxis::N => (
                c.n as f64,
                format!("r={} epsilon={} delta={}", c.r, c.epsilon, c.delta),
            ),
            ScalingAxis::InvEpsSq => (
                1.0 / (c.epsilon * c.epsilon),
                format!("n={} r={} delta={}", c.n, c.r, c.delta),
            ),
        };
        // the duel budget does not depend on r, so duels group across it
        let fixed = if c.algorithm == "dueling_elimination" && axis == ScalingAxis::N {
            format!("epsilon={} delta={}", c.epsilon, c.delta)
        } else {
            fixed
        };
        let y = match metric {
            ScalingMetric::MeanSamples => c.mean_samples,
            ScalingMetric::SearchSamples => c.mean_search_samples,
        };
        groups
            .entry((c.algorithm.clone(), fixed))
            .or_default()
            .entry(x.to_bits())
            .or_default()
            .push(y);
    }

    let mut out = Vec::new();
    for ((algorithm, fixed), by_x) in groups {
        let mut points: Vec<(f64, f64)> = by_x
            .into_iter()
            .map(|(bits, ys)| {
                (
                    f64::from_bits(bits),
                    ys.iter().sum::<f64>() / ys.len() as f64,
                )
            })
            .collect();
        if points.len() < 2 {
            continue;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
            return Err(Error::Fit(format!(
                "{algorithm} ({fixed}): log-log fit needs positive axis values and metrics"
            )));
        }
        let ratios = points.windows(2).map(|w| w[1].1 / w[0].1).collect();
        let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let m = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / m;
        let my = ly.iter().sum::<f64>() / m;
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
        out.push(ScalingGroup {
            algorithm,
            fixed,
            points,
            ratios,
            slope: sxy / sxx,
        });
    }
    if out.is_empty() {
        return Err(Error::Fit("no group has two distinct axis values".into()));
    }
    Ok(ScalingFit {
        axis,
        metric,
        groups: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn easy_plan(replications: usize) -> ExperimentPlan {
        ExperimentPlan {
            master_seed: 7,
            replications,
            epsilons: vec![0.3],
            deltas: vec![0.1],
            instances: vec![PlanInstance {
                name: Some("easy".into()),
                catalog: None,
                spec: Some(
                    InstanceSpec::independent(
                        vec![3.0, 0.0],
                        crate::choice::NoiseFamily::StdGaussian,
                    )
                    .unwrap(),
                ),
            }],
            algorithms: vec![
                AlgorithmKind::SeqPb { k: 2 }.into(),
                AlgorithmKind::DuelingElimination.into(),
            ],
            config: AlgoConfig::default(),
        }
    }

    #[test]
    fn wilson_reference_values() {
        assert!((wilson_lower_bound(100, 100) - 0.963).abs() < 5e-4);
        assert!((wilson_lower_bound(99, 100) - 0.9455).abs() < 5e-4);
        assert!((wilson_lower_bound(200, 200) - 0.9812).abs() < 5e-4);
        assert_eq!(wilson_lower_bound(0, 0), 0.0);
        assert_eq!(wilson_lower_bound(0, 10), 0.0);
    }

    #[test]
    fn single_easy_replication_succeeds() {
        let res = run_plan(&easy_plan(1), Some(1)).unwrap();
        assert_eq!(res.cells.len(), 2);
        for c in &res.cells {
            assert_eq!((c.replications, c.successes), (1, 1));
        }
        assert_eq!(res.replications[0].recommended_arm, 1);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let plan = easy_plan(8);
        let a = run_plan(&plan, Some(1)).unwrap();
        let b = run_plan(&plan, Some(4)).unwrap();
        assert_eq!(a, b);
        let seeds: std::collections::BTreeSet<u64> =
            a.replications.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), a.replications.len());
    }

    #[test]
    fn incompatible_cell_becomes_error_row() {
        let mut plan = easy_plan(2);
        plan.algorithms = vec![
            AlgorithmKind::BlockrankPb { k: 2 }.into(),
            AlgorithmKind::SeqPb { k: 2 }.into(),
        ];
        let res = run_plan(&plan, Some(1)).unwrap();
        assert!(res.has_errors());
        assert!(res.cells[0].error.as_deref().unwrap().contains("k > 2"));
        assert!(res.cells[1].error.is_none());
        assert!(res.replications.iter().all(|r| r.algorithm == "seq_pb"));
    }

    #[test]
    fn plan_validation_names_fields() {
        let mut plan = easy_plan(1);
        plan.deltas = vec![1.5];
        let msg = run_plan(&plan, None).unwrap_err().to_string();
        assert!(msg.contains("deltas[0]"), "{msg}");
        let mut plan = easy_plan(0);
        plan.replications = 0;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn aggregate_matches_run() {
        let res = run_plan(&easy_plan(5), Some(2)).unwrap();
        let again = aggregate(&res.replications);
        for (a, b) in res.cells.iter().zip(&again) {
            let mut a = a.clone();
            a.mean_search_samples = b.mean_search_samples;
            assert_eq!(&a, b);
        }
    }

    #[test]
    fn seeds_are_coordinate_functions() {
        assert_eq!(replication_seed(1, 2, 3), replication_seed(1, 2, 3));
        assert_ne!(replication_seed(1, 2, 3), replication_seed(1, 3, 2));
        assert_ne!(replication_seed(1, 0, 0), replication_seed(2, 0, 0));
    }

    fn cell(alg: &str, n: usize, r: usize, eps: f64, mean: f64) -> CellResult {
        CellResult {
            instance: "x".into(),
            algorithm: alg.into(),
            n,
            r,
            k: 4,
            epsilon: eps,
            delta: 0.1,
            replications: 1,
            successes: 1,
            mean_samples: mean,
            stddev_samples: 0.0,
            wilson_lower_bound: 0.0,
            mean_search_samples: mean / 2.0,
            error: None,
        }
    }

    #[test]
    fn fit_slopes() {
        let flat = [cell("a", 8, 2, 0.3, 50.0), cell("a", 8, 4, 0.3, 50.0)];
        let fit = scaling_fit(&flat, ScalingAxis::R, ScalingMetric::MeanSamples).unwrap();
        assert_eq!(fit.groups[0].slope, 0.0);
        assert_eq!(fit.groups[0].ratios, vec![1.0]);

        let lin = [
            cell("a", 4, 1, 0.3, 10.0),
            cell("a", 8, 1, 0.3, 20.0),
            cell("a", 16, 1, 0.3, 40.0),
        ];
        let fit = scaling_fit(&lin, ScalingAxis::N, ScalingMetric::SearchSamples).unwrap();
        assert!((fit.groups[0].slope - 1.0).abs() < 1e-12);

        let quad = [cell("a", 4, 1, 0.1, 100.0), cell("a", 4, 1, 0.2, 25.0)];
        let fit = scaling_fit(&quad, ScalingAxis::InvEpsSq, ScalingMetric::MeanSamples).unwrap();
        assert!((fit.groups[0].slope - 1.0).abs() < 1e-9);
        assert!((fit.groups[0].ratios[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn fit_needs_two_points() {
        let one = [cell("a", 8, 2, 0.3, 50.0)];
        assert!(matches!(
            scaling_fit(&one, ScalingAxis::R, ScalingMetric::MeanSamples),
            Err(Error::Fit(_))
        ));
        let split = [cell("a", 8, 2, 0.3, 50.0), cell("b", 8, 4, 0.3, 50.0)];
        assert!(scaling_fit(&split, ScalingAxis::R, ScalingMetric::MeanSamples).is_err());
    }

    #[test]
    fn plan_toml_like_json_shape() {
        let json = r#"{
            "master_seed": 1, "replications": 2, "epsilons": [0.3], "deltas": [0.1],
            "instances": [{"catalog": {"generator": "dueling_hard", "n": 4, "epsilon": 0.1}}],
            "algorithms": [{"name": "rank_aware_seq_pb", "k": 4},
                           {"name": "seq_pb", "k": 3, "config": {"seqpb_const": 0.5}}]
        }"#;
        let plan: ExperimentPlan = serde_json::from_str(json).unwrap();
        assert_eq!(
            plan.algorithms[0].kind,
            AlgorithmKind::RankAwareSeqPb { k: 4, r: None }
        );
        assert_eq!(plan.algorithms[1].config.unwrap().seqpb_const, 0.5);
        let bad = json.replace("\"k\": 3", "\"k\": 3, \"bogus\": 1");
        assert!(serde_json::from_str::<ExperimentPlan>(&bad).is_err());
    }
}
