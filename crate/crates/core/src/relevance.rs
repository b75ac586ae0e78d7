//! Feature relevance by symmetrical uncertainty with FCBF-style redundancy pruning.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{ColumnKind, Dataset};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelevanceConfig {
    /// Features with SU against the target at or below this are irrelevant.
    pub epsilon: f64,
    pub bins: usize,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        RelevanceConfig { epsilon: 0.01, bins: 10 }
    }
}

/// Equal-frequency bin codes; equal values always share a bin.
pub fn equal_frequency_bins(values: &[Option<f64>], bins: usize) -> Vec<Option<u32>> {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    present.sort_by(f64::total_cmp);
    let n = present.len();
    let bins = bins.max(1);
    let mut first_pos: Vec<(f64, u32)> = Vec::new();
    for (i, &x) in present.iter().enumerate() {
        if first_pos.last().is_none_or(|(v, _)| *v != x) {
            first_pos.push((x, (i * bins / n) as u32));
        }
    }
    values
        .iter()
        .map(|v| {
            v.map(|x| {
                let idx = first_pos
                    .binary_search_by(|(p, _)| p.total_cmp(&x))
                    .expect("value present in sorted column");
                first_pos[idx].1
            })
        })
        .collect()
}

/// Discrete codes for a column: binned numerics, interned nominal values.
pub fn discretize(ds: &Dataset, col: usize, bins: usize) -> Vec<Option<u32>> {
    if ds.columns()[col].kind == ColumnKind::Numeric {
        equal_frequency_bins(&ds.numeric_column(col), bins)
    } else {
        let mut codes: HashMap<String, u32> = HashMap::new();
        (0..ds.n_rows())
            .map(|r| {
                ds.text_of(r, col).map(|v| {
                    let next = codes.len() as u32;
                    *codes.entry(v).or_insert(next)
                })
            })
            .collect()
    }
}

fn entropy_bits<K>(counts: &BTreeMap<K, usize>, total: usize) -> f64 {
    let n = total as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// SU = 2·I(X;Y)/(H(X)+H(Y)) over pairwise-complete entries, in bits.
pub fn symmetrical_uncertainty(x: &[Option<u32>], y: &[Option<u32>]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("symmetrical uncertainty needs equal-length columns"));
    }
    let mut hx = BTreeMap::new();
    let mut hy = BTreeMap::new();
    let mut hxy = BTreeMap::new();
    let mut n = 0;
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            *hx.entry(*a).or_insert(0) += 1;
            *hy.entry(*b).or_insert(0) += 1;
            *hxy.entry((*a, *b)).or_insert(0) += 1;
            n += 1;
        }
    }
    if n < 2 {
        return Err(Error::invalid("symmetrical uncertainty needs at least 2 complete pairs"));
    }
    let ex = entropy_bits(&hx, n);
    let ey = entropy_bits(&hy, n);
    if ex + ey <= 0.0 {
        return Ok(0.0);
    }
    let mi = ex + ey - entropy_bits(&hxy, n);
    Ok((2.0 * mi / (ex + ey)).clamp(0.0, 1.0))
}

/// SU between two dataset columns, or 0 when too few complete pairs exist.
pub fn column_su(ds: &Dataset, a: usize, b: usize, bins: usize) -> f64 {
    symmetrical_uncertainty(&discretize(ds, a, bins), &discretize(ds, b, bins)).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceStatus {
    Relevant,
    PrunedRedundant,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub feature: String,
    #[serde(rename = "su")]
    pub su_with_target: f64,
    pub status: RelevanceStatus,
    pub pruned_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceRanking {
    pub entries: Vec<RankingEntry>,
}

impl RelevanceRanking {
    pub fn flagged(&self) -> impl Iterator<Item = &RankingEntry> {
        self.entries.iter().filter(|e| e.status != RelevanceStatus::Relevant)
    }

    pub fn score(&self) -> f64 {
        if self.entries.is_empty() {
            return 1.0;
        }
        let relevant = self.entries.iter().filter(|e| e.status == RelevanceStatus::Relevant).count();
        relevant as f64 / self.entries.len() as f64
    }
}

/// Ranks features by SU with the target and prunes redundant ones.
///
/// A feature is pruned when an earlier kept feature shares at least as much
/// SU with it as it shares with the target.
pub fn rank_and_prune(ds: &Dataset, cfg: &RelevanceConfig) -> Result<RelevanceRanking> {
    let t = ds.require_target()?;
    let features = ds.feature_indices();
    if features.is_empty() {
        return Err(Error::invalid("feature relevance needs at least one feature"));
    }
    let codes: BTreeMap<usize, Vec<Option<u32>>> = features
        .iter()
        .chain(std::iter::once(&t))
        .map(|&c| (c, discretize(ds, c, cfg.bins)))
        .collect();
    let su = |a: usize, b: usize| symmetrical_uncertainty(&codes[&a], &codes[&b]).unwrap_or(0.0);
    let mut order: Vec<(usize, f64)> = features.iter().map(|&f| (f, su(f, t))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut kept: Vec<usize> = Vec::new();
    let mut entries = Vec::with_capacity(order.len());
    for (f, su_t) in order {
        let name = ds.columns()[f].name.clone();
        if su_t <= cfg.epsilon {
            entries.push(RankingEntry {
                feature: name,
                su_with_target: su_t,
                status: RelevanceStatus::Irrelevant,
                pruned_by: None,
            });
            continue;
        }
        match kept.iter().find(|&&g| su(g, f) >= su_t) {
            Some(&g) => entries.push(RankingEntry {
                feature: name,
                su_with_target: su_t,
                status: RelevanceStatus::PrunedRedundant,
                pruned_by: Some(ds.columns()[g].name.clone()),
            }),
            None => {
                kept.push(f);
                entries.push(RankingEntry {
                    feature: name,
                    su_with_target: su_t,
                    status: RelevanceStatus::Relevant,
                    pruned_by: None,
                });
            }
        }
    }
    Ok(RelevanceRanking { entries })
}

pub fn assess_relevance(ds: &Dataset, cfg: &RelevanceConfig) -> Result<Assessment> {
    if ds.target_index().is_none() {
        return Ok(Assessment::abstain("feature relevance needs a target column; none configured"));
    }
    if ds.feature_indices().is_empty() {
        return Ok(Assessment::abstain("no features besides the target"));
    }
    let ranking = rank_and_prune(ds, cfg)?;
    let flagged: Vec<&str> = ranking.flagged().map(|e| e.feature.as_str()).collect();
    let explanation = if flagged.is_empty() {
        "All features are relevant to the target.".to_string()
    } else {
        format!(
            "{} of {} features are redundant or irrelevant to the target: {}.",
            flagged.len(),
            ranking.entries.len(),
            flagged.join(", ")
        )
    };
    let recommendations = if flagged.is_empty() {
        Vec::new()
    } else {
        vec![Recommendation::op(
            "Drop the pruned and irrelevant features.",
            RemediationOp::DropFeatures,
            json!({ "columns": flagged }),
        )]
    };
    Ok(Assessment {
        score: ranking.score(),
        explanation,
        recommendations,
        details: json!({ "ranking": ranking.entries, "flagged": flagged }),
    })
}

/// Drops flagged features; `accepted = None` drops every flagged one.
pub fn drop_features(ds: &Dataset, ranking: &RelevanceRanking, accepted: Option<&[String]>) -> Result<Dataset> {
    let flagged: BTreeSet<&str> = ranking.flagged().map(|e| e.feature.as_str()).collect();
    let names: Vec<String> = match accepted {
        None => flagged.iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            for name in list {
                if ds.target_name() == Some(name.as_str()) {
                    return Err(Error::invalid(format!("cannot drop the target column '{name}'")));
                }
                if !flagged.contains(name.as_str()) {
                    return Err(Error::invalid(format!("column '{name}' was not flagged by feature relevance")));
                }
            }
            list.to_vec()
        }
    };
    ds.drop_columns(&names)
}
