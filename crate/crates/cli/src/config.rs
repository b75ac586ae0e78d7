//! TOML run configuration. Top-level keys describe the run; tables named
//! after metrics override that metric's parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dqkit_core::engine::DEFAULT_SEED;
use dqkit_core::{ColumnKind, EngineConfig, LoadOptions};
use serde::Deserialize;

const METRIC_SECTIONS: [&str; 8] = [
    "class_overlap",
    "label_purity",
    "class_parity",
    "feature_relevance",
    "data_fairness",
    "feature_correlation",
    "data_completeness",
    "outlier_detection",
];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    input: Option<PathBuf>,
    target: Option<String>,
    metrics: Option<Vec<String>>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    missing_tokens: Option<Vec<String>>,
    #[serde(default)]
    column_types: BTreeMap<String, ColumnKind>,
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub target: Option<String>,
    pub metrics: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub missing_tokens: Option<Vec<String>>,
    pub column_types: BTreeMap<String, ColumnKind>,
    pub engine: EngineConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        let mut sections = toml::Table::new();
        for name in METRIC_SECTIONS {
            if let Some(v) = table.remove(name) {
                sections.insert(name.to_string(), v);
            }
        }
        let run: RunSection = toml::Value::Table(table).try_into().context("invalid config")?;
        let engine: EngineConfig = toml::Value::Table(sections)
            .try_into()
            .context("invalid metric parameters in config")?;
        Ok(RunConfig {
            input: run.input,
            target: run.target,
            metrics: run.metrics,
            out: run.out,
            seed: run.seed,
            missing_tokens: run.missing_tokens,
            column_types: run.column_types,
            engine,
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn load_options(&self) -> LoadOptions {
        let mut opts = LoadOptions {
            target: self.target.clone(),
            overrides: self.column_types.clone(),
            ..Default::default()
        };
        if let Some(tokens) = &self.missing_tokens {
            opts.missing_tokens = tokens.clone();
        }
        opts
    }

    pub fn engine_config(&self) -> EngineConfig {
        self.engine.clone().with_seed(self.seed.unwrap_or(DEFAULT_SEED))
    }
}
