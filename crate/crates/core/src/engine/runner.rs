use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use super::config::EngineConfig;
use super::decisions::DecisionFile;
use super::ledger::{EntryKind, Ledger, LineageEntry};
use super::result::{Assessment, Clock, MetricId, QualityResult, RemediationOp};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::homogeneity::{transform_column, Annotation};
use crate::parity::{has_categorical, recommend_resampling, ResamplingMethod};
use crate::{fairness, homogeneity, hygiene, overlap, parity, purity, relevance};

/// Runs one metric without touching any ledger.
pub fn evaluate(ds: &Dataset, metric: MetricId, cfg: &EngineConfig) -> Result<Assessment> {
    let res = match metric {
        MetricId::ClassOverlap => {
            ds.require_target()?;
            overlap::assess_overlap(ds, &cfg.class_overlap)
        }
        MetricId::LabelPurity => {
            ds.require_target()?;
            purity::assess_purity(ds, &cfg.purity())
        }
        MetricId::ClassParity => {
            ds.require_target()?;
            parity::assess_parity(ds, &cfg.parity())
        }
        MetricId::FeatureRelevance => relevance::assess_relevance(ds, &cfg.feature_relevance),
        MetricId::DataHomogeneity => homogeneity::assess_homogeneity(ds),
        MetricId::DataFairness => {
            ds.require_target()?;
            fairness::assess_fairness(ds, cfg.data_fairness.as_ref())
        }
        MetricId::FeatureCorrelation => hygiene::assess_correlation(ds, &cfg.feature_correlation),
        MetricId::DataCompleteness => hygiene::assess_completeness(ds),
        MetricId::OutlierDetection => hygiene::assess_outliers(ds, &cfg.outlier_detection),
        MetricId::DataDuplicates => hygiene::assess_duplicates(ds),
    };
    res.map_err(|e| match e {
        Error::TargetRequired => Error::TargetRequired,
        other => Error::Metric {
            metric,
            source: Box::new(other),
        },
    })
}

fn metric_params(metric: MetricId, cfg: &EngineConfig) -> Json {
    let v = match metric {
        MetricId::ClassOverlap => serde_json::to_value(cfg.class_overlap),
        MetricId::LabelPurity => serde_json::to_value(cfg.purity()),
        MetricId::ClassParity => serde_json::to_value(cfg.parity()),
        MetricId::FeatureRelevance => serde_json::to_value(cfg.feature_relevance),
        MetricId::DataFairness => serde_json::to_value(&cfg.data_fairness),
        MetricId::FeatureCorrelation => serde_json::to_value(cfg.feature_correlation),
        MetricId::DataCompleteness => serde_json::to_value(cfg.data_completeness),
        MetricId::OutlierDetection => serde_json::to_value(cfg.outlier_detection),
        MetricId::DataHomogeneity | MetricId::DataDuplicates => Ok(json!({})),
    };
    v.expect("configs serialize")
}

/// Outcome of a batch assessment.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub results: Vec<QualityResult>,
    /// Metrics not run because the dataset has no target.
    pub skipped: Vec<(MetricId, String)>,
    pub failures: Vec<(MetricId, String)>,
}

/// A remediated dataset together with its ledger record.
#[derive(Debug, Clone)]
pub struct Remediation {
    pub dataset: Dataset,
    pub entry: LineageEntry,
}

/// Runs metrics and remediations, recording each in a ledger.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    clock: Clock,
    ledger: Ledger,
}

impl Engine {
    pub fn new(cfg: EngineConfig, clock: Clock) -> Engine {
        Engine {
            cfg,
            clock,
            ledger: Ledger::new(),
        }
    }

    pub fn with_ledger(mut self, ledger: Ledger) -> Engine {
        self.ledger = ledger;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn into_ledger(self) -> Ledger {
        self.ledger
    }

    fn check_head(&self, ds: &Dataset) -> Result<()> {
        match self.ledger.head() {
            Some(head) if head != ds.fingerprint() => Err(Error::ChainBroken {
                expected: head.to_string(),
                found: ds.fingerprint().to_string(),
            }),
            _ => Ok(()),
        }
    }

    fn assessment_entry(&self, ds: &Dataset, metric: MetricId, outcome: &Result<QualityResult>) -> LineageEntry {
        let (result, error) = match outcome {
            Ok(r) => (Some(r.clone()), None),
            Err(e) => (None, Some(e.to_string())),
        };
        LineageEntry {
            op_id: metric.as_str().to_string(),
            kind: EntryKind::Assessment,
            metric_id: metric,
            params: metric_params(metric, &self.cfg),
            decisions_ref: None,
            rows_affected: 0,
            cols_affected: Vec::new(),
            score_before: None,
            score_after: result.as_ref().map(|r| r.score),
            input_fingerprint: ds.fingerprint().to_string(),
            output_fingerprint: ds.fingerprint().to_string(),
            timestamp: result.as_ref().map_or_else(|| self.clock.now(), |r| r.timestamp),
            result,
            error,
            notes: Vec::new(),
        }
    }

    fn stamp(&self, ds: &Dataset, metric: MetricId) -> Result<QualityResult> {
        let a = evaluate(ds, metric, &self.cfg)?;
        Ok(QualityResult::stamp(metric, ds, a, self.clock.now()))
    }

    /// Runs one metric and records it; failures are recorded and returned.
    pub fn run_metric(&mut self, ds: &Dataset, metric: MetricId) -> Result<QualityResult> {
        self.check_head(ds)?;
        let outcome = self.stamp(ds, metric);
        let entry = self.assessment_entry(ds, metric, &outcome);
        self.ledger.push(entry);
        outcome
    }

    /// Runs the given metrics concurrently and records them in canonical order.
    pub fn run_all(&mut self, ds: &Dataset, metrics: &[MetricId]) -> Result<RunSummary> {
        self.check_head(ds)?;
        let mut wanted: Vec<MetricId> = MetricId::ALL.into_iter().filter(|m| metrics.contains(m)).collect();
        let mut summary = RunSummary::default();
        if ds.target_index().is_none() {
            wanted.retain(|m| {
                if m.requires_target() {
                    summary
                        .skipped
                        .push((*m, format!("{m} skipped: the dataset has no target column")));
                    false
                } else {
                    true
                }
            });
        }
        let outcomes: Vec<(MetricId, Result<QualityResult>)> =
            wanted.par_iter().map(|&m| (m, self.stamp(ds, m))).collect();
        for (m, outcome) in outcomes {
            let entry = self.assessment_entry(ds, m, &outcome);
            self.ledger.push(entry);
            match outcome {
                Ok(r) => summary.results.push(r),
                Err(e) => summary.failures.push((m, e.to_string())),
            }
        }
        Ok(summary)
    }

    fn score_of(&self, ds: &Dataset, metric: MetricId) -> Option<f64> {
        evaluate(ds, metric, &self.cfg).ok().map(|a| a.score.clamp(0.0, 1.0))
    }

    /// Applies one remediation, recording it whether it succeeds or not.
    pub fn apply_remediation(
        &mut self,
        ds: &Dataset,
        op: RemediationOp,
        params: &Json,
        decisions: Option<&DecisionFile>,
    ) -> Result<Remediation> {
        self.check_head(ds)?;
        if let Some(d) = decisions {
            d.check_fresh(ds.fingerprint())?;
        }
        let metric = op.owning_metric();
        let score_before = self.score_of(ds, metric);
        let mut entry = LineageEntry {
            op_id: op.as_str().to_string(),
            kind: EntryKind::Remediation,
            metric_id: metric,
            params: params.clone(),
            decisions_ref: decisions.map(DecisionFile::fingerprint),
            rows_affected: 0,
            cols_affected: Vec::new(),
            score_before,
            score_after: None,
            input_fingerprint: ds.fingerprint().to_string(),
            output_fingerprint: ds.fingerprint().to_string(),
            timestamp: self.clock.now(),
            result: None,
            error: None,
            notes: Vec::new(),
        };
        match dispatch(ds, op, params, decisions, &self.cfg) {
            Ok(applied) => {
                entry.rows_affected = applied.rows_affected;
                entry.cols_affected = applied.cols_affected;
                entry.notes = applied.notes;
                entry.output_fingerprint = applied.dataset.fingerprint().to_string();
                entry.score_after = self.score_of(&applied.dataset, metric);
                self.ledger.push(entry.clone());
                Ok(Remediation {
                    dataset: applied.dataset,
                    entry,
                })
            }
            Err(e) => {
                entry.error = Some(e.to_string());
                entry.score_after = score_before;
                self.ledger.push(entry);
                Err(e)
            }
        }
    }
}

struct Applied {
    dataset: Dataset,
    rows_affected: usize,
    cols_affected: Vec<String>,
    notes: Vec<String>,
}

fn param_list<T: serde::de::DeserializeOwned>(params: &Json, key: &str) -> Result<Option<Vec<T>>> {
    match params.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::invalid(format!("parameter '{key}': {e}"))),
    }
}

/// Accepted columns: decisions win over parameters; `None` means all flagged.
fn accepted_columns(params: &Json, decisions: Option<&DecisionFile>) -> Result<Option<Vec<String>>> {
    match decisions {
        Some(d) if !d.columns.is_empty() => Ok(Some(d.accepted_columns())),
        _ => param_list(params, "columns"),
    }
}

fn accepted_rows(params: &Json, decisions: Option<&DecisionFile>) -> Result<Option<Vec<usize>>> {
    match decisions {
        Some(d) if !d.rows.is_empty() => Ok(Some(d.accepted_rows())),
        _ => param_list(params, "rows"),
    }
}

fn dispatch(
    ds: &Dataset,
    op: RemediationOp,
    params: &Json,
    decisions: Option<&DecisionFile>,
    cfg: &EngineConfig,
) -> Result<Applied> {
    let unchanged_cols = |out: &Dataset| -> Vec<String> {
        ds.columns()
            .iter()
            .filter(|c| out.column_index(&c.name).is_err())
            .map(|c| c.name.clone())
            .collect()
    };
    match op {
        RemediationOp::CorrectLabels => {
            let t = ds.require_target()?;
            let analysis = purity::detect_noise(ds, &cfg.purity())?;
            let rows = decisions.filter(|d| !d.rows.is_empty()).map(|d| d.rows.as_slice());
            let (out, changes) = purity::correct_labels(ds, &analysis.candidates, rows)?;
            Ok(Applied {
                dataset: out,
                rows_affected: changes.len(),
                cols_affected: vec![ds.columns()[t].name.clone()],
                notes: changes
                    .iter()
                    .map(|c| format!("row {}: {} -> {}", c.row, c.from, c.to))
                    .collect(),
            })
        }
        RemediationOp::Resample => {
            let pcfg = cfg.parity();
            let (analysis, _) = parity::analyze_parity(ds, &pcfg)?;
            let mut plan = recommend_resampling(&analysis, pcfg.eval_metric, has_categorical(ds), pcfg.seed)?;
            if let Some(m) = params.get("method").filter(|m| !m.is_null()) {
                plan.method = serde_json::from_value::<ResamplingMethod>(m.clone())
                    .map_err(|e| Error::invalid(format!("parameter 'method': {e}")))?;
            }
            let (out, warnings) = parity::resample(ds, &plan, pcfg.k)?;
            Ok(Applied {
                rows_affected: out.n_rows() - ds.n_rows(),
                dataset: out,
                cols_affected: Vec::new(),
                notes: warnings,
            })
        }
        RemediationOp::DropFeatures => {
            let ranking = relevance::rank_and_prune(ds, &cfg.feature_relevance)?;
            let cols = accepted_columns(params, decisions)?;
            let out = relevance::drop_features(ds, &ranking, cols.as_deref())?;
            let dropped = unchanged_cols(&out);
            Ok(Applied {
                dataset: out,
                rows_affected: 0,
                cols_affected: dropped,
                notes: Vec::new(),
            })
        }
        RemediationOp::ApplyTransform => {
            let mut annotations: Vec<Annotation> = decisions.map(|d| d.annotations.clone()).unwrap_or_default();
            if annotations.is_empty() {
                annotations = param_list(params, "annotations")?.unwrap_or_default();
            }
            if annotations.is_empty() {
                return Err(Error::invalid("apply_transform needs at least one annotation"));
            }
            let mut current = ds.clone();
            let mut rows = 0;
            let mut cols = Vec::new();
            let mut notes = Vec::new();
            for a in &annotations {
                let (next, outcome) = transform_column(&current, a)?;
                rows += outcome.rows_changed.len();
                if !cols.contains(&outcome.column) {
                    cols.push(outcome.column.clone());
                }
                notes.push(format!(
                    "{}: {} -> {} via {}",
                    outcome.column, outcome.source_signature, outcome.target_signature, outcome.program
                ));
                current = next;
            }
            Ok(Applied {
                dataset: current,
                rows_affected: rows,
                cols_affected: cols,
                notes,
            })
        }
        RemediationOp::RepairFeatures => {
            let spec = cfg
                .data_fairness
                .as_ref()
                .ok_or_else(|| Error::invalid("repair_features needs a fairness spec in the configuration"))?;
            let level = params
                .get("repair_level")
                .and_then(Json::as_f64)
                .unwrap_or(spec.repair_level);
            let (out, outcome) = fairness::repair_features(ds, spec, level)?;
            let rows = (0..ds.n_rows()).filter(|&r| ds.row(r) != out.row(r)).count();
            Ok(Applied {
                dataset: out,
                rows_affected: rows,
                cols_affected: outcome.repaired_columns,
                notes: outcome.warnings,
            })
        }
        RemediationOp::DropCorrelated => {
            let report = hygiene::correlation_report(ds, &cfg.feature_correlation);
            let cols = accepted_columns(params, decisions)?;
            let out = hygiene::drop_correlated(ds, &report, cols.as_deref())?;
            let dropped = unchanged_cols(&out);
            Ok(Applied {
                dataset: out,
                rows_affected: 0,
                cols_affected: dropped,
                notes: Vec::new(),
            })
        }
        RemediationOp::ImputeMissing => {
            let cols = accepted_columns(params, decisions)?;
            let (out, report) = hygiene::impute_missing(ds, &cfg.data_completeness, cols.as_deref())?;
            let touched: BTreeSet<&str> = report.imputed.iter().map(|c| c.column.as_str()).collect();
            let mut rows: Vec<usize> = report.imputed.iter().map(|c| c.row).collect();
            rows.sort_unstable();
            rows.dedup();
            Ok(Applied {
                rows_affected: rows.len(),
                cols_affected: touched.iter().map(|s| s.to_string()).collect(),
                dataset: out,
                notes: report.warnings,
            })
        }
        RemediationOp::RemoveOutliers => {
            let Some(report) = hygiene::lof_report(ds, &cfg.outlier_detection)? else {
                return Ok(Applied {
                    dataset: ds.clone(),
                    rows_affected: 0,
                    cols_affected: Vec::new(),
                    notes: vec!["insufficient data for LOF".into()],
                });
            };
            let rows = accepted_rows(params, decisions)?;
            let out = hygiene::remove_outliers(ds, &report, rows.as_deref())?;
            Ok(Applied {
                rows_affected: ds.n_rows() - out.n_rows(),
                dataset: out,
                cols_affected: Vec::new(),
                notes: Vec::new(),
            })
        }
        RemediationOp::RemoveDuplicates => {
            let out = hygiene::remove_duplicates(ds)?;
            Ok(Applied {
                rows_affected: ds.n_rows() - out.n_rows(),
                dataset: out,
                cols_affected: Vec::new(),
                notes: Vec::new(),
            })
        }
    }
}
