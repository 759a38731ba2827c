//! The top-level configuration file: one JSON object with the sections
//! `ies`, `training`, `data` and `evaluation`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{ingest_csv, synth_generate, CsvSchema, DataError, DataTable, SynthProfile};
use crate::ies::IesConfig;
use crate::qp::DEFAULT_EPS;
use crate::train::TrainingConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Input table; when absent a synthetic table is generated.
    pub csv: Option<PathBuf>,
    pub schema: CsvSchema,
    pub seed: u64,
    pub days: usize,
    pub profile: SynthProfile,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            csv: None,
            schema: CsvSchema::default(),
            seed: 0,
            days: 60,
            profile: SynthProfile::default(),
        }
    }
}

impl DataConfig {
    /// Reads the configured CSV (relative paths resolve against `base`) or
    /// generates the synthetic table.
    pub fn load(&self, base: &Path) -> Result<DataTable, DataError> {
        match &self.csv {
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                ingest_csv(BufReader::new(File::open(path)?), &self.schema)
            }
            None => Ok(synth_generate(self.seed, self.days, &self.profile)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Demand multipliers, one case each.
    pub scales: Vec<f64>,
    /// Training seeds; costs and metrics are reported as medians over them.
    pub seeds: Vec<u64>,
    /// Data center workload levels of the waste heat study, as fractions.
    pub workloads: Vec<f64>,
    /// Regularization of every evaluation solve.
    pub qp_eps: f64,
    pub qp_tol: f64,
    /// Write one schedule CSV per test day and method (first seed only).
    pub write_schedules: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            scales: vec![0.1, 0.5, 1.0, 1.5],
            seeds: vec![0, 1, 2],
            workloads: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            qp_eps: DEFAULT_EPS,
            qp_tol: crate::qp::DEFAULT_TOL,
            write_schedules: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub ies: IesConfig,
    pub training: TrainingConfig,
    pub data: DataConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

impl AppConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let file = File::open(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: AppConfig = serde_json::from_reader(BufReader::new(file)).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.ies.validate().map_err(|e| invalid(e.to_string()))?;
        self.training.validate().map_err(|e| invalid(e.to_string()))?;
        let arch = &self.training.model;
        if arch.horizon != self.ies.horizon_steps {
            return Err(invalid(format!(
                "forecast horizon {} differs from dispatch horizon {}",
                arch.horizon, self.ies.horizon_steps
            )));
        }
        if arch.channels != crate::ies::N_CHANNELS || arch.calendar != crate::forecast::N_CALENDAR {
            return Err(invalid("forecaster must use 6 channels and the calendar features".into()));
        }
        let ev = &self.evaluation;
        if ev.seeds.is_empty() {
            return Err(invalid("evaluation.seeds must not be empty".into()));
        }
        if ev.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("evaluation.scales must be positive".into()));
        }
        if ev.workloads.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid("evaluation.workloads must be nonnegative".into()));
        }
        if !(ev.qp_eps > 0.0 && ev.qp_tol > 0.0) {
            return Err(invalid("evaluation qp_eps and qp_tol must be positive".into()));
        }
        if self.data.csv.is_none() && self.data.days < 3 {
            return Err(invalid("data.days must be at least 3".into()));
        }
        Ok(())
    }

    /// Pretty JSON of the effective configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
