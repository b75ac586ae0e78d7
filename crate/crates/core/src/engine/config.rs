use serde::{Deserialize, Serialize};

use crate::fairness::FairnessSpec;
use crate::hygiene::{CompletenessConfig, CorrelationConfig, OutlierConfig};
use crate::overlap::OverlapConfig;
use crate::parity::ParityConfig;
use crate::purity::PurityConfig;
use crate::relevance::RelevanceConfig;

pub const DEFAULT_SEED: u64 = 42;

/// Parameters for every metric and remediation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Overrides the seeds of the randomized metrics when set.
    pub seed: Option<u64>,
    pub class_overlap: OverlapConfig,
    pub label_purity: PurityConfig,
    pub class_parity: ParityConfig,
    pub feature_relevance: RelevanceConfig,
    pub data_fairness: Option<FairnessSpec>,
    pub feature_correlation: CorrelationConfig,
    pub data_completeness: CompletenessConfig,
    pub outlier_detection: OutlierConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: None,
            class_overlap: OverlapConfig::default(),
            label_purity: PurityConfig::default(),
            class_parity: ParityConfig::default(),
            feature_relevance: RelevanceConfig::default(),
            data_fairness: None,
            feature_correlation: CorrelationConfig::default(),
            data_completeness: CompletenessConfig::default(),
            outlier_detection: OutlierConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn purity(&self) -> PurityConfig {
        let mut c = self.label_purity;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }

    pub fn parity(&self) -> ParityConfig {
        let mut c = self.class_parity;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c
    }
}
