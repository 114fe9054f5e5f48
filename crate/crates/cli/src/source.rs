use std::path::PathBuf;

use blockrank::instances::{CatalogRequest, InstanceCatalogEntry, DEFAULT_C_FACTOR};
use blockrank::InstanceSpec;
use clap::Args;

use crate::CliError;

/// Generator parameters shared by every command that builds an instance.
#[derive(Args, Debug, Clone, Default)]
pub struct CatalogParams {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// 1-based arm placed on top by perturbed_hard.
    #[arg(long)]
    pub a: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Score gap; defaults to 0 for dueling_hard and planar.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub intra_spread: Option<f64>,
    /// Seed of the random_block generator.
    #[arg(long)]
    pub instance_seed: Option<u64>,
    #[arg(long)]
    pub c_factor: Option<f64>,
}

/// Where an instance comes from: a JSON spec file or a catalog generator.
#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long, conflicts_with = "catalog")]
    pub spec: Option<PathBuf>,
    /// Catalog generator name (see `catalog`).
    #[arg(long, required_unless_present = "spec")]
    pub catalog: Option<String>,
    #[command(flatten)]
    pub params: CatalogParams,
}

fn need<T>(value: Option<T>, flag: &str, generator: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("{generator} needs --{flag}")))
}

impl CatalogParams {
    pub fn request(&self, name: &str) -> Result<CatalogRequest, CliError> {
        Ok(match name {
            "independent_hard" => CatalogRequest::IndependentHard {
                n: need(self.n, "n", name)?,
                epsilon: need(self.epsilon, "epsilon", name)?,
            },
            "perturbed_hard" => {
                let a = need(self.a, "a", name)?;
                if a == 0 {
                    return Err(CliError::Usage("--a is 1-based".into()));
                }
                CatalogRequest::PerturbedHard {
                    n: need(self.n, "n", name)?,
                    a: a - 1,
                    epsilon: need(self.epsilon, "epsilon", name)?,
                }
            }
            "dueling_hard" => CatalogRequest::DuelingHard {
                n: need(self.n, "n", name)?,
                mu: self.mu.unwrap_or(0.0),
                epsilon: self.epsilon.unwrap_or(0.0),
            },
            "fixed_k_infeasible" => CatalogRequest::FixedKInfeasible {
                n: need(self.n, "n", name)?,
                mu: self.mu.unwrap_or(0.0),
                epsilon: need(self.epsilon, "epsilon", name)?,
                c_factor: self.c_factor.unwrap_or(DEFAULT_C_FACTOR),
            },
            "random_block" => CatalogRequest::RandomBlock {
                n: need(self.n, "n", name)?,
                r: need(self.r, "r", name)?,
                gap: need(self.gap, "gap", name)?,
                intra_spread: need(self.intra_spread, "intra-spread", name)?,
                seed: self.instance_seed.unwrap_or(0),
            },
            "planar" => CatalogRequest::Planar {
                k: need(self.k, "k", name)?,
                mu: self.mu.unwrap_or(0.0),
                epsilon: self.epsilon.unwrap_or(0.0),
            },
            other => {
                return Err(CliError::Usage(format!(
                    "unknown generator `{other}`; run `blockrank catalog` for the list"
                )))
            }
        })
    }
}

impl InstanceArgs {
    pub fn load(&self) -> Result<InstanceCatalogEntry, CliError> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let spec: InstanceSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            return Ok(InstanceCatalogEntry {
                name: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "spec".into()),
                provenance: "spec file".into(),
                spec,
            });
        }
        let name = self
            .catalog
            .as_deref()
            .expect("clap requires --spec or --catalog");
        Ok(self.params.request(name)?.build()?)
    }
}
