use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::dataset::Dataset;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    ClassOverlap,
    LabelPurity,
    ClassParity,
    FeatureRelevance,
    DataHomogeneity,
    DataFairness,
    FeatureCorrelation,
    DataCompleteness,
    OutlierDetection,
    DataDuplicates,
}

impl MetricId {
    /// Canonical order used for batch runs, ledgers and reports.
    pub const ALL: [MetricId; 10] = [
        MetricId::ClassOverlap,
        MetricId::LabelPurity,
        MetricId::ClassParity,
        MetricId::FeatureRelevance,
        MetricId::DataHomogeneity,
        MetricId::DataFairness,
        MetricId::FeatureCorrelation,
        MetricId::DataCompleteness,
        MetricId::OutlierDetection,
        MetricId::DataDuplicates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::ClassOverlap => "class_overlap",
            MetricId::LabelPurity => "label_purity",
            MetricId::ClassParity => "class_parity",
            MetricId::FeatureRelevance => "feature_relevance",
            MetricId::DataHomogeneity => "data_homogeneity",
            MetricId::DataFairness => "data_fairness",
            MetricId::FeatureCorrelation => "feature_correlation",
            MetricId::DataCompleteness => "data_completeness",
            MetricId::OutlierDetection => "outlier_detection",
            MetricId::DataDuplicates => "data_duplicates",
        }
    }

    /// Metrics that cannot run without a target column.
    pub fn requires_target(self) -> bool {
        matches!(
            self,
            MetricId::ClassOverlap | MetricId::LabelPurity | MetricId::ClassParity | MetricId::DataFairness
        )
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric_id '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemediationOp {
    CorrectLabels,
    Resample,
    DropFeatures,
    ApplyTransform,
    RepairFeatures,
    DropCorrelated,
    ImputeMissing,
    RemoveOutliers,
    RemoveDuplicates,
}

impl RemediationOp {
    pub const ALL: [RemediationOp; 9] = [
        RemediationOp::CorrectLabels,
        RemediationOp::Resample,
        RemediationOp::DropFeatures,
        RemediationOp::ApplyTransform,
        RemediationOp::RepairFeatures,
        RemediationOp::DropCorrelated,
        RemediationOp::ImputeMissing,
        RemediationOp::RemoveOutliers,
        RemediationOp::RemoveDuplicates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RemediationOp::CorrectLabels => "correct_labels",
            RemediationOp::Resample => "resample",
            RemediationOp::DropFeatures => "drop_features",
            RemediationOp::ApplyTransform => "apply_transform",
            RemediationOp::RepairFeatures => "repair_features",
            RemediationOp::DropCorrelated => "drop_correlated",
            RemediationOp::ImputeMissing => "impute_missing",
            RemediationOp::RemoveOutliers => "remove_outliers",
            RemediationOp::RemoveDuplicates => "remove_duplicates",
        }
    }

    /// The metric whose score the operation is meant to raise.
    pub fn owning_metric(self) -> MetricId {
        match self {
            RemediationOp::CorrectLabels => MetricId::LabelPurity,
            RemediationOp::Resample => MetricId::ClassParity,
            RemediationOp::DropFeatures => MetricId::FeatureRelevance,
            RemediationOp::ApplyTransform => MetricId::DataHomogeneity,
            RemediationOp::RepairFeatures => MetricId::DataFairness,
            RemediationOp::DropCorrelated => MetricId::FeatureCorrelation,
            RemediationOp::ImputeMissing => MetricId::DataCompleteness,
            RemediationOp::RemoveOutliers => MetricId::OutlierDetection,
            RemediationOp::RemoveDuplicates => MetricId::DataDuplicates,
        }
    }
}

impl fmt::Display for RemediationOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RemediationOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RemediationOp::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown remediation op '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub action_text: String,
    /// `None` for advisory actions the toolkit does not automate.
    pub remediation_op_id: Option<RemediationOp>,
    pub parameter_hints: Json,
}

impl Recommendation {
    pub fn op(action: impl Into<String>, op: RemediationOp, hints: Json) -> Self {
        Recommendation {
            action_text: action.into(),
            remediation_op_id: Some(op),
            parameter_hints: hints,
        }
    }

    pub fn advisory(action: impl Into<String>, hints: Json) -> Self {
        Recommendation {
            action_text: action.into(),
            remediation_op_id: None,
            parameter_hints: hints,
        }
    }
}

/// What a metric computes before it is stamped with a fingerprint and time.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub score: f64,
    pub explanation: String,
    pub recommendations: Vec<Recommendation>,
    pub details: Json,
}

impl Assessment {
    /// A perfect score with no findings, used when a metric abstains.
    pub fn abstain(note: impl Into<String>) -> Assessment {
        let note = note.into();
        Assessment {
            score: 1.0,
            explanation: note.clone(),
            recommendations: Vec::new(),
            details: serde_json::json!({ "note": note }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityResult {
    pub metric_id: MetricId,
    pub score: f64,
    pub explanation: String,
    pub recommendations: Vec<Recommendation>,
    pub details: Json,
    pub dataset_fingerprint: String,
    pub timestamp: DateTime<Utc>,
}

impl QualityResult {
    pub fn stamp(metric_id: MetricId, ds: &Dataset, a: Assessment, timestamp: DateTime<Utc>) -> QualityResult {
        QualityResult {
            metric_id,
            score: a.score.clamp(0.0, 1.0),
            explanation: a.explanation,
            recommendations: a.recommendations,
            details: a.details,
            dataset_fingerprint: ds.fingerprint().to_string(),
            timestamp,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Source of timestamps; fixed clocks make outputs byte-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => *t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_strings() {
        for m in MetricId::ALL {
            assert_eq!(m.as_str().parse::<MetricId>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
        }
        for op in RemediationOp::ALL {
            assert_eq!(op.as_str().parse::<RemediationOp>().unwrap(), op);
        }
        assert!("bogus".parse::<MetricId>().is_err());
    }

    #[test]
    fn label_metrics_need_target() {
        let n = MetricId::ALL.iter().filter(|m| m.requires_target()).count();
        assert_eq!(n, 4);
    }
}
