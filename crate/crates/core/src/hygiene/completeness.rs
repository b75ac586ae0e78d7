use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{ColumnKind, Dataset, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};
use crate::relevance::{discretize, symmetrical_uncertainty};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletenessConfig {
    /// Equal-frequency bins used when a numeric column conditions an imputation.
    pub bins: usize,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig { bins: 10 }
    }
}

/// Row indices of missing cells, per column that has any.
pub fn missing_locations(ds: &Dataset) -> BTreeMap<String, Vec<usize>> {
    ds.columns()
        .iter()
        .enumerate()
        .filter_map(|(c, col)| {
            let rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| ds.cell(r, c).is_none()).collect();
            (!rows.is_empty()).then(|| (col.name.clone(), rows))
        })
        .collect()
}

pub fn assess_completeness(ds: &Dataset) -> Result<Assessment> {
    let locations = missing_locations(ds);
    let missing: usize = locations.values().map(Vec::len).sum();
    let total = ds.n_rows() * ds.n_cols();
    let score = if total == 0 { 1.0 } else { 1.0 - missing as f64 / total as f64 };
    let explanation = if missing == 0 {
        "No missing values.".to_string()
    } else {
        format!(
            "{missing} of {total} cells are missing across {} columns.",
            locations.len()
        )
    };
    let recommendations = if missing == 0 {
        Vec::new()
    } else {
        vec![Recommendation::op(
            "Impute missing cells from the most associated observed column.",
            RemediationOp::ImputeMissing,
            json!({ "columns": locations.keys().collect::<Vec<_>>() }),
        )]
    };
    Ok(Assessment {
        score,
        explanation,
        recommendations,
        details: json!({ "missing_cells": missing, "missing_locations": locations }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    ConditionalMode,
    ConditionalMedian,
    GlobalMode,
    GlobalMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub row: usize,
    pub column: String,
    pub value: Value,
    pub associate: Option<String>,
    pub strategy: ImputeStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub imputed: Vec<ImputedCell>,
    pub warnings: Vec<String>,
}

/// Most frequent value; ties go to the smallest rendering.
fn mode(values: &[&Value]) -> Option<Value> {
    let mut counts: BTreeMap<String, (usize, &Value)> = BTreeMap::new();
    for v in values {
        counts.entry(v.to_string()).or_insert((0, v)).0 += 1;
    }
    let best = counts.values().map(|(c, _)| *c).max()?;
    counts.into_values().find(|(c, _)| *c == best).map(|(_, v)| v.clone())
}

fn median(values: &[&Value]) -> Option<Value> {
    let mut xs: Vec<f64> = values.iter().filter_map(|v| v.as_f64()).collect();
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let m = if n % 2 == 1 { xs[n / 2] } else { (xs[n / 2 - 1] + xs[n / 2]) / 2.0 };
    Some(Value::Num(m))
}

/// Fills missing cells of the given columns (all when `None`) from the original data.
pub fn impute_missing(
    ds: &Dataset,
    cfg: &CompletenessConfig,
    columns: Option<&[String]>,
) -> Result<(Dataset, ImputationReport)> {
    let targets: BTreeSet<usize> = match columns {
        None => (0..ds.n_cols()).collect(),
        Some(names) => names.iter().map(|n| ds.column_index(n)).collect::<Result<_>>()?,
    };
    let codes: Vec<Vec<Option<u32>>> = (0..ds.n_cols()).map(|c| discretize(ds, c, cfg.bins)).collect();
    let mut su = vec![vec![0.0; ds.n_cols()]; ds.n_cols()];
    for &a in &targets {
        for b in 0..ds.n_cols() {
            if a != b {
                su[a][b] = symmetrical_uncertainty(&codes[a], &codes[b]).unwrap_or(0.0);
            }
        }
    }

    let mut updates = Vec::new();
    let mut imputed = Vec::new();
    let mut warnings = Vec::new();
    for &c in &targets {
        let name = &ds.columns()[c].name;
        let numeric = ds.columns()[c].kind == ColumnKind::Numeric;
        let observed: Vec<usize> = (0..ds.n_rows()).filter(|&r| ds.cell(r, c).is_some()).collect();
        let missing: Vec<usize> = (0..ds.n_rows()).filter(|&r| ds.cell(r, c).is_none()).collect();
        if missing.is_empty() {
            continue;
        }
        if observed.is_empty() {
            warnings.push(format!("column '{name}' is entirely missing; left as is"));
            continue;
        }
        let summarize = |rows: &[usize]| {
            let vals: Vec<&Value> = rows.iter().filter_map(|&r| ds.cell(r, c)).collect();
            if numeric {
                median(&vals)
            } else {
                mode(&vals)
            }
        };
        let global = summarize(&observed).ok_or_else(|| Error::invalid("no observed values"))?;
        for r in missing {
            let associate = (0..ds.n_cols())
                .filter(|&b| b != c && codes[b][r].is_some() && su[c][b] > 0.0)
                .fold(None, |best: Option<usize>, b| match best {
                    Some(a) if su[c][a] >= su[c][b] => Some(a),
                    _ => Some(b),
                });
            let conditioned = associate.and_then(|b| {
                let peers: Vec<usize> = observed.iter().copied().filter(|&o| codes[b][o] == codes[b][r]).collect();
                summarize(&peers)
            });
            let (value, strategy) = match (conditioned, numeric) {
                (Some(v), true) => (v, ImputeStrategy::ConditionalMedian),
                (Some(v), false) => (v, ImputeStrategy::ConditionalMode),
                (None, true) => (global.clone(), ImputeStrategy::GlobalMedian),
                (None, false) => (global.clone(), ImputeStrategy::GlobalMode),
            };
            let used = matches!(strategy, ImputeStrategy::ConditionalMedian | ImputeStrategy::ConditionalMode);
            imputed.push(ImputedCell {
                row: r,
                column: name.clone(),
                value: value.clone(),
                associate: associate.filter(|_| used).map(|b| ds.columns()[b].name.clone()),
                strategy,
            });
            updates.push((r, c, Some(value)));
        }
    }
    Ok((ds.with_cells(updates)?, ImputationReport { imputed, warnings }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObservedDomain;

    fn s(v: &str) -> Option<Value> {
        Some(Value::Str(v.into()))
    }

    fn n(v: f64) -> Option<Value> {
        Some(Value::Num(v))
    }

    fn staff() -> Dataset {
        let rows = vec![
            vec![s("manager"), n(100.0)],
            vec![s("manager"), n(100.0)],
            vec![s("manager"), None],
            vec![s("clerk"), n(40.0)],
            vec![s("clerk"), n(42.0)],
            vec![s("clerk"), n(38.0)],
            vec![s("intern"), n(10.0)],
            vec![None, n(12.0)],
        ];
        Dataset::from_rows(
            vec![("designation".into(), ColumnKind::Categorical), ("salary".into(), ColumnKind::Numeric)],
            rows,
            None,
        )
        .unwrap()
    }

    #[test]
    fn score_arithmetic() {
        let rows: Vec<Vec<Option<Value>>> = (0..10)
            .map(|r| (0..10).map(|c| if r == c && r < 5 { None } else { n(1.0) }).collect())
            .collect();
        let schema = (0..10).map(|c| (format!("c{c}"), ColumnKind::Numeric)).collect();
        let ds = Dataset::from_rows(schema, rows, None).unwrap();
        let a = assess_completeness(&ds).unwrap();
        assert!((a.score - 0.95).abs() < 1e-12);
        assert_eq!(a.details["missing_locations"]["c3"], json!([3]));
    }

    #[test]
    fn conditional_median_for_designation() {
        let ds = staff();
        let (out, report) = impute_missing(&ds, &CompletenessConfig::default(), None).unwrap();
        assert_eq!(out.cell(2, 1), Some(&Value::Num(100.0)));
        let cell = report.imputed.iter().find(|c| c.row == 2).unwrap();
        assert_eq!(cell.strategy, ImputeStrategy::ConditionalMedian);
        assert_eq!(cell.associate.as_deref(), Some("designation"));
        assert!(out.cell(7, 0).is_some());
        assert_eq!(assess_completeness(&out).unwrap().score, 1.0);
    }

    #[test]
    fn imputed_values_stay_in_domain() {
        let ds = staff();
        let (out, _) = impute_missing(&ds, &CompletenessConfig::default(), None).unwrap();
        let v = out.cell(7, 0).unwrap().as_str().unwrap().to_string();
        match &ds.columns()[0].observed_domain {
            ObservedDomain::Values { values } => assert!(values.contains(&v)),
            other => panic!("{other:?}"),
        }
        let x = out.cell(2, 1).unwrap().as_f64().unwrap();
        assert!((10.0..=100.0).contains(&x));
    }

    #[test]
    fn entirely_missing_column_warns() {
        let ds = Dataset::from_rows(
            vec![("a".into(), ColumnKind::Numeric), ("b".into(), ColumnKind::Categorical)],
            vec![vec![n(1.0), None], vec![n(2.0), None]],
            None,
        )
        .unwrap();
        let (out, report) = impute_missing(&ds, &CompletenessConfig::default(), None).unwrap();
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(out.fingerprint(), ds.fingerprint());
    }

    #[test]
    fn column_subset_only() {
        let ds = staff();
        let (out, report) = impute_missing(&ds, &CompletenessConfig::default(), Some(&["salary".into()])).unwrap();
        assert_eq!(report.imputed.len(), 1);
        assert!(out.cell(7, 0).is_none());
    }
}
