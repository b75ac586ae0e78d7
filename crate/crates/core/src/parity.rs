//! Class parity: imbalance scoring and oversampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{Cell, ColumnKind, Dataset, HeomSpace, Labels, NeighborQuery, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};
use crate::overlap::{self, AgreementTag, OverlapConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMetric {
    F1,
    AucRoc,
    GMean,
    Recall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplingMethod {
    RandomOversample,
    BorderlineSmote2,
    SmoteNc,
    Smote,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParityConfig {
    /// Minority share at or above which the score is 1.
    pub min_share: f64,
    /// Minority size under which the score is penalised.
    pub size_threshold: usize,
    pub eval_metric: EvalMetric,
    /// Neighbours used by the SMOTE family.
    pub k: usize,
    pub seed: u64,
    pub overlap: OverlapConfig,
}

impl Default for ParityConfig {
    fn default() -> Self {
        ParityConfig {
            min_share: 0.30,
            size_threshold: 20,
            eval_metric: EvalMetric::F1,
            k: 5,
            seed: 42,
            overlap: OverlapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityAnalysis {
    pub class_counts: BTreeMap<String, usize>,
    pub minority_label: String,
    pub majority_label: String,
    pub imbalance_ratio: f64,
    pub minority_share: f64,
    pub difficult_fraction: f64,
    pub minority_size: usize,
    pub multiclass: bool,
}

/// Score for one minority class against the majority.
///
/// 1 at or above the share threshold; below it the share ratio is scaled by
/// the easy fraction and a small-class penalty.
pub fn parity_score(minority: usize, majority: usize, difficult_fraction: f64, cfg: &ParityConfig) -> f64 {
    let share = minority as f64 / (minority + majority) as f64;
    if share >= cfg.min_share {
        return 1.0;
    }
    let size_factor = if cfg.size_threshold == 0 {
        1.0
    } else {
        (minority as f64 / cfg.size_threshold as f64).min(1.0)
    };
    (share / cfg.min_share) * (1.0 - difficult_fraction) * size_factor
}

pub fn analyze_parity(ds: &Dataset, cfg: &ParityConfig) -> Result<(ParityAnalysis, f64)> {
    let labels = Labels::from_dataset(ds)?;
    if labels.n_classes() < 2 {
        return Err(Error::invalid("class parity needs at least two classes"));
    }
    let counts = labels.counts();
    // smallest count, ties to the lexicographically smallest label (classes are sorted)
    let minority = (0..counts.len()).min_by_key(|&j| (counts[j], j)).expect("non-empty");
    let majority = (0..counts.len())
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .expect("non-empty");

    let difficult = difficult_fractions(ds, &labels, &cfg.overlap)?;
    let mut score: f64 = 1.0;
    for j in (0..counts.len()).filter(|&j| j != majority) {
        score = score.min(parity_score(counts[j], counts[majority], difficult[j], cfg));
    }
    let analysis = ParityAnalysis {
        class_counts: labels.classes.iter().cloned().zip(counts.iter().copied()).collect(),
        minority_label: labels.classes[minority].clone(),
        majority_label: labels.classes[majority].clone(),
        imbalance_ratio: counts[majority] as f64 / counts[minority] as f64,
        minority_share: counts[minority] as f64 / (counts[minority] + counts[majority]) as f64,
        difficult_fraction: difficult[minority],
        minority_size: counts[minority],
        multiclass: labels.n_classes() > 2,
    };
    Ok((analysis, score))
}

/// Per class, the share of its rows tagged PD or FD.
fn difficult_fractions(ds: &Dataset, labels: &Labels, cfg: &OverlapConfig) -> Result<Vec<f64>> {
    let c = labels.n_classes();
    if labels.len() < 2 || ds.feature_indices().is_empty() {
        return Ok(vec![0.0; c]);
    }
    let cfg = OverlapConfig {
        k: cfg.k.min(labels.len() - 1),
        ..*cfg
    };
    let tagging = overlap::tag_with_labels(ds, labels, &cfg)?;
    let mut hard = vec![0usize; c];
    for (i, t) in tagging.tags.iter().enumerate() {
        if t.tag != AgreementTag::FA {
            hard[labels.y[i]] += 1;
        }
    }
    let counts = labels.counts();
    Ok((0..c).map(|j| hard[j] as f64 / counts[j] as f64).collect())
}

pub fn assess_parity(ds: &Dataset, cfg: &ParityConfig) -> Result<Assessment> {
    let (analysis, score) = analyze_parity(ds, cfg)?;
    let mut recommendations = Vec::new();
    let mut explanation = if score >= 1.0 {
        format!(
            "Classes are balanced enough: minority share {:.4} is at least {}.",
            analysis.minority_share, cfg.min_share
        )
    } else {
        format!(
            "Minority class '{}' has {} rows (share {:.4}, imbalance ratio {:.3}, difficult fraction {:.4}).",
            analysis.minority_label,
            analysis.minority_size,
            analysis.minority_share,
            analysis.imbalance_ratio,
            analysis.difficult_fraction
        )
    };
    if score < 1.0 {
        if analysis.multiclass {
            explanation.push_str(" Multi-class target: scored pairwise against the majority; resampling recommendations are suppressed.");
        } else {
            let plan = recommend_resampling(&analysis, cfg.eval_metric, has_categorical(ds), cfg.seed)?;
            recommendations.push(Recommendation::op(
                format!("Oversample the minority class with {:?} to equalise class counts.", plan.method),
                RemediationOp::Resample,
                serde_json::to_value(&plan)?,
            ));
        }
    }
    Ok(Assessment {
        score,
        explanation,
        recommendations,
        details: json!({
            "class_counts": analysis.class_counts,
            "minority_label": analysis.minority_label,
            "imbalance_ratio": analysis.imbalance_ratio,
            "minority_share": analysis.minority_share,
            "difficult_fraction": analysis.difficult_fraction,
            "minority_size": analysis.minority_size,
            "multiclass": analysis.multiclass,
        }),
    })
}

/// True when any non-target column is categorical or text.
pub fn has_categorical(ds: &Dataset) -> bool {
    ds.feature_indices().iter().any(|&c| ds.columns()[c].kind.is_nominal())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplingPlan {
    pub method: ResamplingMethod,
    pub target_counts: BTreeMap<String, usize>,
    pub gap_seed: u64,
}

pub fn recommend_resampling(
    analysis: &ParityAnalysis,
    eval_metric: EvalMetric,
    has_categorical: bool,
    seed: u64,
) -> Result<ResamplingPlan> {
    if analysis.multiclass {
        return Err(Error::invalid("resampling rules apply to binary targets only"));
    }
    let method = match (eval_metric, has_categorical) {
        (EvalMetric::F1 | EvalMetric::AucRoc | EvalMetric::GMean, _) => ResamplingMethod::RandomOversample,
        (EvalMetric::Recall, false) => ResamplingMethod::BorderlineSmote2,
        (EvalMetric::Recall, true) => ResamplingMethod::SmoteNc,
    };
    let top = analysis.class_counts.values().copied().max().unwrap_or(0);
    Ok(ResamplingPlan {
        method,
        target_counts: analysis.class_counts.keys().map(|k| (k.clone(), top)).collect(),
        gap_seed: seed,
    })
}

/// Appends synthetic rows so every class reaches its planned count.
///
/// Returns the new dataset and any warnings (reduced k, missing danger set).
pub fn resample(ds: &Dataset, plan: &ResamplingPlan, k: usize) -> Result<(Dataset, Vec<String>)> {
    let labels = Labels::from_dataset(ds)?;
    let counts = labels.counts();
    let t = ds.require_target()?;
    for (label, &want) in &plan.target_counts {
        let j = labels
            .class_index(label)
            .ok_or_else(|| Error::invalid(format!("plan names unknown class '{label}'")))?;
        if want < counts[j] {
            return Err(Error::invalid(format!(
                "plan asks for {want} rows of class '{label}' which already has {}",
                counts[j]
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.gap_seed);
    let mut warnings = Vec::new();
    let mut synthetic: Vec<Vec<Cell>> = Vec::new();
    let space = if plan.method == ResamplingMethod::RandomOversample || ds.feature_indices().is_empty() {
        None
    } else {
        Some(HeomSpace::new(ds)?)
    };
    for (label, &want) in &plan.target_counts {
        let j = labels.class_index(label).expect("validated above");
        let need = want - counts[j];
        if need == 0 {
            continue;
        }
        let members: Vec<usize> = labels
            .rows
            .iter()
            .zip(&labels.y)
            .filter(|(_, &y)| y == j)
            .map(|(&r, _)| r)
            .collect();
        let ctx = SmoteContext {
            ds,
            labels: &labels,
            members: &members,
            class: j,
            target: t,
        };
        match (plan.method, &space) {
            (ResamplingMethod::RandomOversample, _) | (_, None) => {
                for _ in 0..need {
                    let r = members[rng.random_range(0..members.len())];
                    synthetic.push(ds.row(r).to_vec());
                }
            }
            (method, Some(space)) => {
                if members.len() < 2 {
                    return Err(Error::invalid("need ≥ 2 minority rows"));
                }
                let k_eff = if k > members.len() - 1 {
                    warnings.push(format!(
                        "class '{label}': k reduced from {k} to {}",
                        members.len() - 1
                    ));
                    members.len() - 1
                } else {
                    k.max(1)
                };
                let rows = ctx.generate(space, method, k_eff, need, &mut rng, &mut warnings)?;
                synthetic.extend(rows);
            }
        }
    }
    if synthetic.is_empty() {
        return Ok((ds.clone(), warnings));
    }
    Ok((ds.append_rows(synthetic)?, warnings))
}

struct SmoteContext<'a> {
    ds: &'a Dataset,
    labels: &'a Labels,
    members: &'a [usize],
    class: usize,
    target: usize,
}

impl SmoteContext<'_> {
    fn generate(
        &self,
        space: &HeomSpace,
        method: ResamplingMethod,
        k: usize,
        need: usize,
        rng: &mut ChaCha8Rng,
        warnings: &mut Vec<String>,
    ) -> Result<Vec<Vec<Cell>>> {
        let q = NeighborQuery { k, exclude_self: true };
        let same = space.knn_among(self.members, self.members, q)?;
        let mut seeds: Vec<usize> = (0..self.members.len()).collect();
        let mut all_nn = Vec::new();
        if method == ResamplingMethod::BorderlineSmote2 {
            let pos = self.labels.position_map(self.ds.n_rows());
            let k_all = k.min(self.labels.len() - 1);
            all_nn = space.knn_among(self.members, &self.labels.rows, NeighborQuery { k: k_all, exclude_self: true })?;
            let danger: Vec<usize> = all_nn
                .iter()
                .enumerate()
                .filter(|(_, list)| {
                    let other = list
                        .iter()
                        .filter(|n| pos[n.row].map(|p| self.labels.y[p]) != Some(self.class))
                        .count();
                    2 * other > list.len() && other < list.len()
                })
                .map(|(i, _)| i)
                .collect();
            if danger.is_empty() {
                warnings.push("no borderline (danger) minority rows; seeding from every minority row".into());
            } else {
                seeds = danger;
            }
        }
        let mut out = Vec::with_capacity(need);
        for _ in 0..need {
            let s = seeds[rng.random_range(0..seeds.len())];
            let seed_row = self.members[s];
            let row = match method {
                ResamplingMethod::BorderlineSmote2 => {
                    let list = &all_nn[s];
                    let nb = list[rng.random_range(0..list.len())].row;
                    let own = self.ds.text_of(nb, self.target) == Some(self.labels.classes[self.class].clone());
                    let gap = if own { rng.random::<f64>() } else { rng.random::<f64>() * 0.5 };
                    self.interpolate(seed_row, nb, gap, None)
                }
                ResamplingMethod::SmoteNc => {
                    let list = &same[s];
                    let nb = list[rng.random_range(0..list.len())].row;
                    let gap = rng.random::<f64>();
                    let neighbours: Vec<usize> = list.iter().map(|n| n.row).collect();
                    self.interpolate(seed_row, nb, gap, Some(&neighbours))
                }
                _ => {
                    let list = &same[s];
                    let nb = list[rng.random_range(0..list.len())].row;
                    let gap = rng.random::<f64>();
                    self.interpolate(seed_row, nb, gap, None)
                }
            };
            out.push(row);
        }
        Ok(out)
    }

    /// Numeric cells move `gap` of the way toward the neighbour; nominal cells
    /// take the neighbourhood mode when `mode_from` is given, else the seed's value.
    fn interpolate(&self, seed: usize, nb: usize, gap: f64, mode_from: Option<&[usize]>) -> Vec<Cell> {
        let mut row = self.ds.row(seed).to_vec();
        for c in self.ds.feature_indices() {
            match self.ds.columns()[c].kind {
                ColumnKind::Numeric => {
                    if let (Some(Value::Num(a)), Some(Value::Num(b))) = (self.ds.cell(seed, c), self.ds.cell(nb, c)) {
                        row[c] = Some(Value::Num(a + gap * (b - a)));
                    }
                }
                _ => {
                    if let Some(rows) = mode_from {
                        let mut freq: BTreeMap<String, usize> = BTreeMap::new();
                        for &r in rows {
                            if let Some(v) = self.ds.text_of(r, c) {
                                *freq.entry(v).or_default() += 1;
                            }
                        }
                        let best = freq.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
                        if let Some((v, _)) = best {
                            row[c] = Some(Value::Str(v.clone()));
                        }
                    }
                }
            }
        }
        row[self.target] = self.ds.row(seed)[self.target].clone();
        row
    }
}
