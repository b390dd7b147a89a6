//! Benchmark harness: suites, episodes, metrics, traces and the CLI.

pub mod cli;
mod episode;
mod metrics;
mod suite;
mod trace;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::BeliefConfig;
use crate::perception::NoiseConfig;
use crate::planning::{AgentSetup, PlannerConfig};
use crate::scene::{Catalog, EnvConfig};

pub use episode::{run_episode, run_exploration, run_suite, EpisodeResult, ExplorationResult};
pub use metrics::{aggregate, parse_metrics_csv, render_table, write_metrics_csv, MetricsRow, MetricsTable};
pub use suite::{build_suite, read_suite, suite_json, write_suite, SuiteRecord};
pub use trace::{record_exploration_trace, record_trace, BeliefSnapshot, EpisodeTrace, TraceEntry};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no results to aggregate")]
    EmptyInput,
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } => 2,
            HarnessError::Config(_) | HarnessError::EmptyInput => 1,
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// The JSON configuration document: one block per subsystem, each optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub noise: NoiseConfig,
    pub planner: PlannerConfig,
    pub env: EnvConfig,
    pub belief: BeliefConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.noise.validate().map_err(HarnessError::Config)?;
        self.belief.validate().map_err(HarnessError::Config)?;
        self.planner.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.env.max_steps == 0 {
            return Err(HarnessError::Config("env.max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn agent_setup(&self) -> AgentSetup {
        AgentSetup::new(Catalog::default(), self.noise, self.env, self.planner, self.belief)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"noise": {"true_positive_rate": 0.8}}"#).unwrap();
        assert_eq!(cfg.noise.true_positive_rate, 0.8);
        assert_eq!(cfg.noise.pixel_noise_std, NoiseConfig::default().pixel_noise_std);
        assert_eq!(cfg.planner, PlannerConfig::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"planner": {"importance_mix": 2.0}}"#).unwrap();
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 1);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
