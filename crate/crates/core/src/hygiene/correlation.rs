use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::Dataset;
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationConfig {
    pub threshold: f64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig { threshold: 0.8 }
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ over pairwise-complete entries; `None` if either side is constant.
pub fn spearman(x: &[Option<f64>], y: &[Option<f64>]) -> Option<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    if a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(&a), average_ranks(&b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (p, q) in ra.iter().zip(&rb) {
        sab += (p - ma) * (q - mb);
        saa += (p - ma) * (p - ma);
        sbb += (q - mb) * (q - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPair {
    pub col_a: String,
    pub col_b: String,
    pub spearman_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub threshold: f64,
    pub numeric_columns: usize,
    pub pairs: Vec<CorrelatedPair>,
    pub flagged: Vec<CorrelatedPair>,
    pub drop_set: Vec<String>,
    pub notes: Vec<String>,
}

impl CorrelationReport {
    pub fn score(&self) -> f64 {
        if self.numeric_columns == 0 {
            1.0
        } else {
            1.0 - self.drop_set.len() as f64 / self.numeric_columns as f64
        }
    }
}

pub fn correlation_report(ds: &Dataset, cfg: &CorrelationConfig) -> CorrelationReport {
    let cols = ds.numeric_features();
    let names: Vec<String> = cols.iter().map(|&c| ds.columns()[c].name.clone()).collect();
    let data: Vec<Vec<Option<f64>>> = cols.iter().map(|&c| ds.numeric_column(c)).collect();
    let m = cols.len();
    let mut rho = vec![vec![None; m]; m];
    let mut pairs = Vec::new();
    let mut notes = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            match spearman(&data[i], &data[j]) {
                Some(r) => {
                    rho[i][j] = Some(r);
                    rho[j][i] = Some(r);
                    pairs.push((i, j, r));
                }
                None => notes.push(format!(
                    "correlation of '{}' and '{}' undefined (constant or too few complete rows); skipped",
                    names[i], names[j]
                )),
            }
        }
    }
    let mean_abs: Vec<f64> = (0..m)
        .map(|i| {
            let vals: Vec<f64> = rho[i].iter().flatten().map(|r| r.abs()).collect();
            if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect();
    let mut drop = BTreeSet::new();
    let mut flagged = Vec::new();
    for &(i, j, r) in &pairs {
        if r.abs() >= cfg.threshold {
            drop.insert(if mean_abs[i] > mean_abs[j] { i } else { j });
            flagged.push((i, j, r));
        }
    }
    let to_pair = |&(i, j, r): &(usize, usize, f64)| CorrelatedPair {
        col_a: names[i].clone(),
        col_b: names[j].clone(),
        spearman_rho: r,
    };
    CorrelationReport {
        threshold: cfg.threshold,
        numeric_columns: m,
        pairs: pairs.iter().map(to_pair).collect(),
        flagged: flagged.iter().map(to_pair).collect(),
        drop_set: drop.into_iter().map(|i| names[i].clone()).collect(),
        notes,
    }
}

pub fn assess_correlation(ds: &Dataset, cfg: &CorrelationConfig) -> Result<Assessment> {
    if ds.numeric_features().len() < 2 {
        return Ok(Assessment::abstain("fewer than 2 numeric columns; nothing to correlate"));
    }
    let report = correlation_report(ds, cfg);
    let explanation = if report.flagged.is_empty() {
        format!("No numeric column pair reaches |ρ| ≥ {}.", cfg.threshold)
    } else {
        format!(
            "{} column pairs have |ρ| ≥ {}; dropping {} would remove the collinearity.",
            report.flagged.len(),
            cfg.threshold,
            report.drop_set.join(", ")
        )
    };
    let recommendations = if report.drop_set.is_empty() {
        Vec::new()
    } else {
        vec![Recommendation::op(
            "Drop the most broadly correlated columns.",
            RemediationOp::DropCorrelated,
            json!({ "columns": report.drop_set }),
        )]
    };
    Ok(Assessment {
        score: report.score(),
        explanation,
        recommendations,
        details: json!({
            "threshold": report.threshold,
            "pairs": report.pairs,
            "correlated_pairs": report.flagged,
            "drop_set": report.drop_set,
            "notes": report.notes,
        }),
    })
}

/// Drops the drop set, or the accepted subset of it.
pub fn drop_correlated(ds: &Dataset, report: &CorrelationReport, accepted: Option<&[String]>) -> Result<Dataset> {
    let names = match accepted {
        None => report.drop_set.clone(),
        Some(list) => {
            if let Some(bad) = list.iter().find(|n| !report.drop_set.contains(n)) {
                return Err(Error::invalid(format!("column '{bad}' is not in the correlation drop set")));
            }
            list.to_vec()
        }
    };
    ds.drop_columns(&names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnKind, Value};
    use proptest::prelude::*;

    fn num_ds(cols: &[(&str, Vec<f64>)]) -> Dataset {
        let n = cols[0].1.len();
        let rows = (0..n)
            .map(|r| cols.iter().map(|(_, v)| Some(Value::Num(v[r]))).collect())
            .collect();
        let schema = cols.iter().map(|(name, _)| (name.to_string(), ColumnKind::Numeric)).collect();
        Dataset::from_rows(schema, rows, None).unwrap()
    }

    /// Ranks by counting, then textbook Pearson.
    fn oracle(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let less = v.iter().filter(|b| *b < a).count() as f64;
                    let eq = v.iter().filter(|b| *b == a).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = rx.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn monotone_and_reversed() {
        let x = [1.0, 2.0, 5.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(spearman(&some(&x), &some(&y)), Some(1.0));
        assert_eq!(spearman(&some(&x), &some(&neg)), Some(-1.0));
    }

    #[test]
    fn ties_match_oracle() {
        let x = [1.0, 2.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let r = spearman(&some(&x), &some(&y)).unwrap();
        assert!((r - oracle(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn constant_column_skipped() {
        let ds = num_ds(&[("a", vec![1.0, 2.0, 3.0]), ("b", vec![5.0; 3])]);
        let rep = correlation_report(&ds, &CorrelationConfig::default());
        assert!(rep.pairs.is_empty());
        assert_eq!(rep.notes.len(), 1);
        assert_eq!(rep.score(), 1.0);
    }

    #[test]
    fn dominating_column_dropped() {
        let base: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let hub: Vec<f64> = base.iter().map(|v| v * 2.0 + 1.0).collect();
        let noise: Vec<f64> = (0..30).map(|i| ((i * 7919) % 31) as f64).collect();
        let mix: Vec<f64> = base.iter().zip(&noise).map(|(a, b)| a + 3.0 * b).collect();
        let ds = num_ds(&[("base", base), ("hub", hub), ("noise", noise), ("mix", mix)]);
        let cfg = CorrelationConfig::default();
        let rep = correlation_report(&ds, &cfg);
        assert!(!rep.flagged.is_empty());
        assert!(rep.drop_set.len() < 4);
        let out = drop_correlated(&ds, &rep, None).unwrap();
        let after = correlation_report(&out, &cfg);
        assert!(after.flagged.is_empty(), "{:?}", after.flagged);
        assert!((assess_correlation(&ds, &cfg).unwrap().score - rep.score()).abs() < 1e-12);
    }

    #[test]
    fn tie_in_mean_drops_later_column() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ds = num_ds(&[("a", a.clone()), ("b", a)]);
        let rep = correlation_report(&ds, &CorrelationConfig::default());
        assert_eq!(rep.drop_set, vec!["b".to_string()]);
        assert!((rep.score() - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spearman_matches_oracle(pairs in prop::collection::vec((0i32..6, 0i32..6), 3..40)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            if let Some(r) = spearman(&some(&x), &some(&y)) {
                prop_assert!((r - oracle(&x, &y)).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
