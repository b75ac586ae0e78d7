use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::Dataset;
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};

const DISTANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierConfig {
    pub k: usize,
    pub threshold: f64,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig { k: 20, threshold: 1.5 }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt().max(DISTANCE_FLOOR)
}

/// Local outlier factor of every point, using exactly `k` nearest neighbors
/// (ties broken by index) and distances floored at 1e-12.
pub fn lof_scores(points: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("LOF needs 1 ≤ k < n, got k = {k}, n = {n}")));
    }
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut d: Vec<(usize, f64)> = (0..n)
                .filter(|&o| o != p)
                .map(|o| (o, euclid(&points[p], &points[o])))
                .collect();
            d.select_nth_unstable_by(k - 1, |a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            d.truncate(k);
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            d
        })
        .collect();
    let k_dist: Vec<f64> = neighbors.iter().map(|nb| nb[k - 1].1).collect();
    let lrd: Vec<f64> = neighbors
        .iter()
        .map(|nb| {
            let reach: f64 = nb.iter().map(|&(o, d)| k_dist[o].max(d)).sum();
            k as f64 / reach
        })
        .collect();
    Ok(neighbors
        .iter()
        .enumerate()
        .map(|(p, nb)| nb.iter().map(|&(o, _)| lrd[o]).sum::<f64>() / (k as f64 * lrd[p]))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofReport {
    pub k: usize,
    pub threshold: f64,
    /// `(row, lof)` for every analyzed row.
    pub scores: Vec<(usize, f64)>,
    pub outlier_rows: Vec<usize>,
    pub excluded_rows: Vec<usize>,
}

impl LofReport {
    pub fn score(&self) -> f64 {
        if self.scores.is_empty() {
            1.0
        } else {
            1.0 - self.outlier_rows.len() as f64 / self.scores.len() as f64
        }
    }
}

/// LOF over min-max normalized numeric features; `None` when there is too little data.
pub fn lof_report(ds: &Dataset, cfg: &OutlierConfig) -> Result<Option<LofReport>> {
    let cols = ds.numeric_features();
    if cols.is_empty() {
        return Ok(None);
    }
    let data: Vec<Vec<Option<f64>>> = cols.iter().map(|&c| ds.numeric_column(c)).collect();
    let (rows, excluded): (Vec<usize>, Vec<usize>) =
        (0..ds.n_rows()).partition(|&r| data.iter().all(|col| col[r].is_some()));
    if rows.len() < cfg.k + 1 {
        return Ok(None);
    }
    let scaled: Vec<Vec<f64>> = {
        let bounds: Vec<(f64, f64)> = data
            .iter()
            .map(|col| {
                rows.iter()
                    .map(|&r| col[r].unwrap())
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
            })
            .collect();
        rows.iter()
            .map(|&r| {
                data.iter()
                    .zip(&bounds)
                    .map(|(col, &(lo, hi))| if hi > lo { (col[r].unwrap() - lo) / (hi - lo) } else { 0.0 })
                    .collect()
            })
            .collect()
    };
    let lof = lof_scores(&scaled, cfg.k)?;
    let scores: Vec<(usize, f64)> = rows.iter().copied().zip(lof).collect();
    let outlier_rows = scores.iter().filter(|(_, s)| *s > cfg.threshold).map(|(r, _)| *r).collect();
    Ok(Some(LofReport {
        k: cfg.k,
        threshold: cfg.threshold,
        scores,
        outlier_rows,
        excluded_rows: excluded,
    }))
}

pub fn assess_outliers(ds: &Dataset, cfg: &OutlierConfig) -> Result<Assessment> {
    let Some(report) = lof_report(ds, cfg)? else {
        return Ok(Assessment::abstain("insufficient data for LOF"));
    };
    let explanation = if report.outlier_rows.is_empty() {
        "No outliers found.".to_string()
    } else {
        format!(
            "{} of {} analyzed rows have LOF above {}.",
            report.outlier_rows.len(),
            report.scores.len(),
            report.threshold
        )
    };
    let recommendations = if report.outlier_rows.is_empty() {
        Vec::new()
    } else {
        vec![Recommendation::op(
            "Review and remove the flagged outlier rows.",
            RemediationOp::RemoveOutliers,
            json!({ "rows": report.outlier_rows }),
        )]
    };
    let lof: serde_json::Map<String, serde_json::Value> =
        report.scores.iter().map(|(r, s)| (r.to_string(), json!(s))).collect();
    Ok(Assessment {
        score: report.score(),
        explanation,
        recommendations,
        details: json!({
            "k": report.k,
            "threshold": report.threshold,
            "lof_scores": lof,
            "outlier_rows": report.outlier_rows,
            "excluded_rows": report.excluded_rows,
        }),
    })
}

/// Drops flagged rows, or the accepted subset of them.
pub fn remove_outliers(ds: &Dataset, report: &LofReport, accepted: Option<&[usize]>) -> Result<Dataset> {
    let flagged: BTreeSet<usize> = report.outlier_rows.iter().copied().collect();
    let drop: BTreeSet<usize> = match accepted {
        None => flagged,
        Some(rows) => {
            if let Some(bad) = rows.iter().find(|r| !flagged.contains(r)) {
                return Err(Error::invalid(format!("row {bad} was not flagged as an outlier")));
            }
            rows.iter().copied().collect()
        }
    };
    ds.drop_rows(&drop)
}
