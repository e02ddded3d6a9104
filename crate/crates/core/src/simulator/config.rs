//! TOML experiment configuration.
//!
//! ```toml
//! scenario = "M1"            # or "M2"
//! sigma_multiplier = 0.25
//! reps = 500
//! seed = 20190419
//! methods = ["TCL", "LCT"]
//! criteria = ["MSPE_D", "MSPEB_D"]   # optional, defaults to all six
//! schedule = "roebling.csv"          # optional, relative to this file
//! exclude = ["qm17"]                 # optional
//! threads = 4                        # optional
//! epsilon = 1e-8                     # optional
//! max_iter = 100                     # optional
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::clustering::{ChainOptions, Method, DEFAULT_EPSILON, DEFAULT_MAX_ITER};
use crate::crossval::Criterion;
use crate::error::{Error, Result};
use crate::simulator::experiment::ExperimentSpec;
use crate::simulator::scenario::BaseScenario;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    sigma_multiplier: f64,
    reps: usize,
    seed: u64,
    methods: Vec<String>,
    criteria: Option<Vec<String>>,
    schedule: Option<PathBuf>,
    #[serde(default)]
    exclude: Vec<String>,
    threads: Option<usize>,
    epsilon: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: BaseScenario,
    pub sigma_multiplier: f64,
    /// Real schedule file; a synthetic schedule is generated when absent.
    pub schedule: Option<PathBuf>,
    pub exclude: Vec<String>,
    pub spec: ExperimentSpec,
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let scenario: BaseScenario = raw.scenario.parse()?;
        if !(raw.sigma_multiplier >= 0.0 && raw.sigma_multiplier.is_finite()) {
            return Err(Error::Config(format!("sigma_multiplier {} must be >= 0", raw.sigma_multiplier)));
        }
        if raw.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        let methods = raw.methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
        let criteria = match raw.criteria {
            Some(list) => list.iter().map(|c| c.parse()).collect::<Result<Vec<Criterion>>>()?,
            None => Criterion::ALL.to_vec(),
        };
        let spec = ExperimentSpec {
            reps: raw.reps,
            methods,
            criteria,
            master_seed: raw.seed,
            threads: raw.threads,
            chain: ChainOptions {
                epsilon: raw.epsilon.unwrap_or(DEFAULT_EPSILON),
                max_iter: raw.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            },
        };
        Ok(ExperimentConfig {
            scenario,
            sigma_multiplier: raw.sigma_multiplier,
            schedule: raw.schedule.map(|p| if p.is_absolute() { p } else { base_dir.join(p) }),
            exclude: raw.exclude,
            spec,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        ExperimentConfig::parse(&text, dir)
    }
}
