//! Disparate impact on a protected attribute and quantile-alignment repair.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{ColumnKind, Dataset, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};

fn full_repair() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessSpec {
    pub protected_attribute: String,
    pub privileged_values: Vec<String>,
    pub favorable_label: String,
    #[serde(default = "full_repair")]
    pub repair_level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    Privileged,
    Unprivileged,
}

impl FairnessSpec {
    /// Group of every row; `None` where the protected value is missing.
    pub fn groups(&self, ds: &Dataset) -> Result<Vec<Option<Group>>> {
        let col = ds.column_index(&self.protected_attribute)?;
        if ds.target_index() == Some(col) {
            return Err(Error::invalid("protected attribute cannot be the target"));
        }
        if ds.columns()[col].kind == ColumnKind::Text {
            return Err(Error::invalid(format!(
                "protected attribute '{}' must be categorical",
                self.protected_attribute
            )));
        }
        let privileged: BTreeSet<&str> = self.privileged_values.iter().map(String::as_str).collect();
        let groups: Vec<Option<Group>> = (0..ds.n_rows())
            .map(|r| {
                ds.text_of(r, col).map(|v| {
                    if privileged.contains(v.as_str()) {
                        Group::Privileged
                    } else {
                        Group::Unprivileged
                    }
                })
            })
            .collect();
        for (g, name) in [(Group::Privileged, "privileged"), (Group::Unprivileged, "unprivileged")] {
            if !groups.contains(&Some(g)) {
                return Err(Error::invalid(format!(
                    "{name} group of '{}' is empty",
                    self.protected_attribute
                )));
            }
        }
        Ok(groups)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparateImpactResult {
    pub n_priv: usize,
    pub n_unpriv: usize,
    pub p_unpriv: f64,
    pub p_priv: f64,
    pub di: Option<f64>,
    pub score: f64,
    pub flag: Option<String>,
}

/// Score from the two favorable rates.
pub fn disparate_impact(p_unpriv: f64, p_priv: f64) -> (Option<f64>, f64, Option<String>) {
    match (p_unpriv > 0.0, p_priv > 0.0) {
        (true, true) => {
            let di = p_unpriv / p_priv;
            (Some(di), di.min(1.0 / di), None)
        }
        (false, false) => (None, 1.0, Some("no favorable outcomes in either group".into())),
        _ => (None, 0.0, Some("undefined ratio".into())),
    }
}

pub fn measure_fairness(ds: &Dataset, spec: &FairnessSpec) -> Result<DisparateImpactResult> {
    let target = ds.require_target()?;
    let groups = spec.groups(ds)?;
    let mut counts = [[0usize; 2]; 2];
    for (r, g) in groups.iter().enumerate() {
        let (Some(g), Some(y)) = (g, ds.text_of(r, target)) else {
            continue;
        };
        let gi = (*g == Group::Privileged) as usize;
        counts[gi][0] += 1;
        counts[gi][1] += (y == spec.favorable_label) as usize;
    }
    let [unpriv, priv_] = counts;
    if priv_[0] == 0 || unpriv[0] == 0 {
        return Err(Error::invalid("a protected group has no labelled rows"));
    }
    let p_unpriv = unpriv[1] as f64 / unpriv[0] as f64;
    let p_priv = priv_[1] as f64 / priv_[0] as f64;
    let (di, score, flag) = disparate_impact(p_unpriv, p_priv);
    Ok(DisparateImpactResult {
        n_priv: priv_[0],
        n_unpriv: unpriv[0],
        p_unpriv,
        p_priv,
        di,
        score,
        flag,
    })
}

pub fn assess_fairness(ds: &Dataset, spec: Option<&FairnessSpec>) -> Result<Assessment> {
    let Some(spec) = spec else {
        return Ok(Assessment::abstain("no protected attribute configured"));
    };
    if ds.target_index().is_none() {
        return Ok(Assessment::abstain("fairness needs a target column; none configured"));
    }
    let res = measure_fairness(ds, spec)?;
    let explanation = match (&res.di, &res.flag) {
        (Some(di), _) => format!(
            "Favorable rate {:.3} for unprivileged vs {:.3} for privileged values of '{}' (disparate impact {:.3}).",
            res.p_unpriv, res.p_priv, spec.protected_attribute, di
        ),
        (None, flag) => format!(
            "Favorable rates {:.3} (unprivileged) and {:.3} (privileged): {}.",
            res.p_unpriv,
            res.p_priv,
            flag.as_deref().unwrap_or("undefined")
        ),
    };
    let recommendations = if res.score < 1.0 {
        vec![Recommendation::op(
            "Repair numeric features so their distributions match across protected groups.",
            RemediationOp::RepairFeatures,
            json!({ "protected_attribute": spec.protected_attribute, "repair_level": spec.repair_level }),
        )]
    } else {
        Vec::new()
    };
    Ok(Assessment {
        score: res.score,
        explanation,
        recommendations,
        details: json!({
            "protected_attribute": spec.protected_attribute,
            "privileged_values": spec.privileged_values,
            "favorable_label": spec.favorable_label,
            "group_sizes": { "privileged": res.n_priv, "unprivileged": res.n_unpriv },
            "rates": { "privileged": res.p_priv, "unprivileged": res.p_unpriv },
            "disparate_impact": res.di,
            "flag": res.flag,
            "score_mapping": "min(di, 1/di)",
        }),
    })
}

/// Linear interpolation of a sorted sample at quantile `q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Quantile of each value within its sample; tied values share their mean position.
fn within_quantiles(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![0.5];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut q = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 / (n - 1) as f64;
        for &k in &order[i..=j] {
            q[k] = mid;
        }
        i = j + 1;
    }
    q
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub repaired_columns: Vec<String>,
    pub cells_changed: usize,
    pub warnings: Vec<String>,
}

/// Moves each numeric feature value toward the cross-group median quantile function.
pub fn repair_features(ds: &Dataset, spec: &FairnessSpec, level: f64) -> Result<(Dataset, RepairOutcome)> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::invalid(format!("repair level {level} outside [0, 1]")));
    }
    let groups = spec.groups(ds)?;
    let protected = ds.column_index(&spec.protected_attribute)?;
    let cols: Vec<usize> = ds
        .numeric_features()
        .into_iter()
        .filter(|&c| c != protected)
        .collect();
    if cols.is_empty() {
        return Ok((
            ds.clone(),
            RepairOutcome {
                repaired_columns: Vec::new(),
                cells_changed: 0,
                warnings: vec!["no numeric features to repair".into()],
            },
        ));
    }
    let updates: Vec<(usize, usize, f64)> = cols
        .par_iter()
        .flat_map_iter(|&c| {
            let column = ds.numeric_column(c);
            let members = |g: Group| -> Vec<usize> {
                (0..ds.n_rows())
                    .filter(|&r| groups[r] == Some(g) && column[r].is_some())
                    .collect()
            };
            let parts: Vec<Vec<usize>> = [Group::Privileged, Group::Unprivileged]
                .into_iter()
                .map(members)
                .filter(|m| !m.is_empty())
                .collect();
            let sorted: Vec<Vec<f64>> = parts
                .iter()
                .map(|m| {
                    let mut v: Vec<f64> = m.iter().map(|&r| column[r].unwrap()).collect();
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
            let mut out = Vec::new();
            for rows in &parts {
                let values: Vec<f64> = rows.iter().map(|&r| column[r].unwrap()).collect();
                for ((&r, &x), q) in rows.iter().zip(&values).zip(within_quantiles(&values)) {
                    let target = median(sorted.iter().map(|s| quantile(s, q)).collect());
                    out.push((r, c, x + level * (target - x)));
                }
            }
            out
        })
        .collect();
    let mut changed = 0;
    let cells: Vec<_> = updates
        .into_iter()
        .filter(|&(r, c, v)| ds.cell(r, c).and_then(Value::as_f64) != Some(v))
        .inspect(|_| changed += 1)
        .map(|(r, c, v)| (r, c, Some(Value::Num(v))))
        .collect();
    let out = ds.with_cells(cells)?;
    Ok((
        out,
        RepairOutcome {
            repaired_columns: cols.iter().map(|&c| ds.columns()[c].name.clone()).collect(),
            cells_changed: changed,
            warnings: Vec::new(),
        },
    ))
}
