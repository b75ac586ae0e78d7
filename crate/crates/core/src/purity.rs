//! Label noise detection with confident learning.
//!
//! Out-of-sample class probabilities come from a cross-fitted, Laplace
//! smoothed KNN vote. The confident joint counts rows whose given label
//! disagrees with a class they confidently belong to; candidates are then
//! chosen per off-diagonal cell by margin (prune by noise rate). Two filters
//! cut false positives: rows inside class-overlap regions are dropped, and a
//! candidate survives only when its neighbourhood agrees with the suggested
//! label.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{stratified_folds, Cell, Dataset, HeomSpace, Labels, NeighborQuery, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp, RowDecision};
use crate::error::{Error, Result};
use crate::overlap::{self, OverlapConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PurityConfig {
    pub folds: usize,
    /// Neighbours voting in the probability estimate.
    pub k: usize,
    /// Neighbours consulted by the neighbourhood prune.
    pub prune_k: usize,
    pub seed: u64,
    pub overlap_filter: bool,
    pub neighborhood_prune: bool,
    /// Below this many labelled rows the metric abstains.
    pub min_rows: usize,
    pub overlap: OverlapConfig,
}

impl Default for PurityConfig {
    fn default() -> Self {
        PurityConfig {
            folds: 5,
            k: 10,
            prune_k: 10,
            seed: 42,
            overlap_filter: true,
            neighborhood_prune: true,
            min_rows: 20,
            overlap: OverlapConfig::default(),
        }
    }
}

impl PurityConfig {
    /// Plain confident learning with both filters switched off.
    pub fn without_filters(self) -> Self {
        PurityConfig {
            overlap_filter: false,
            neighborhood_prune: false,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityEstimate {
    pub classes: Vec<String>,
    /// Labelled dataset rows, ascending.
    pub rows: Vec<usize>,
    /// Given class index per entry of `rows`.
    pub given: Vec<usize>,
    /// Per row, per class out-of-sample probability.
    pub probs: Vec<Vec<f64>>,
    pub folds: usize,
    pub seed: u64,
    /// Classes with a single member; never suggested and never flagged.
    pub excluded_classes: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Cross-fitted smoothed KNN class probabilities.
///
/// For a held-out row with `m` training neighbours, class `j` gets
/// `(count_j + 1) / (m + c)`.
pub fn estimate_probabilities(ds: &Dataset, folds: usize, k: usize, seed: u64) -> Result<ProbabilityEstimate> {
    if folds < 2 {
        return Err(Error::invalid("probability estimation needs at least 2 folds"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let labels = Labels::from_dataset(ds)?;
    let c = labels.n_classes();
    if c == 0 {
        return Err(Error::invalid("target column has no values"));
    }
    let counts = labels.counts();
    let mut warnings = Vec::new();
    let excluded_classes: Vec<usize> = (0..c).filter(|&j| counts[j] < 2).collect();
    for &j in &excluded_classes {
        warnings.push(format!(
            "class {} has a single member and is excluded from noise detection",
            labels.classes[j]
        ));
    }
    let split = stratified_folds(ds, seed, folds)?;
    warnings.extend(split.warnings);
    let pos = labels.position_map(ds.n_rows());
    let space = HeomSpace::new(ds)?;

    let mut probs = vec![Vec::new(); labels.len()];
    for (f, fold) in split.folds.iter().enumerate() {
        let held: Vec<usize> = fold.iter().copied().filter(|&r| pos[r].is_some()).collect();
        if held.is_empty() {
            continue;
        }
        let train: Vec<usize> = split
            .folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .filter(|&r| pos[r].is_some())
            .collect();
        if train.is_empty() {
            return Err(Error::invalid("a fold left no training rows"));
        }
        let m = k.min(train.len());
        let nn = space.knn_among(&held, &train, NeighborQuery { k: m, exclude_self: false })?;
        for (&r, list) in held.iter().zip(nn) {
            let mut votes = vec![0usize; c];
            for n in &list {
                votes[labels.y[pos[n.row].expect("training rows are labelled")]] += 1;
            }
            let denom = (m + c) as f64;
            probs[pos[r].expect("held rows are labelled")] = votes.iter().map(|&v| (v + 1) as f64 / denom).collect();
        }
    }
    Ok(ProbabilityEstimate {
        classes: labels.classes,
        rows: labels.rows,
        given: labels.y,
        probs,
        folds,
        seed,
        excluded_classes,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidentJoint {
    /// `counts[i][j]`: rows given label `i` confidently belonging to `j`.
    pub counts: Vec<Vec<usize>>,
    /// Per-class mean self-confidence.
    pub thresholds: Vec<f64>,
    /// Confident class per row, if any threshold was met.
    pub assigned: Vec<Option<usize>>,
}

/// Counts (given, confident) label pairs.
///
/// `t_j` is the mean of `p_j` over rows labelled `j`. A row joins the count
/// of the class with the largest probability among those meeting their
/// threshold; ties go to the lower class index.
pub fn confident_joint(probs: &[Vec<f64>], given: &[usize], n_classes: usize) -> ConfidentJoint {
    let mut sums = vec![0.0; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (p, &g) in probs.iter().zip(given) {
        sums[g] += p[g];
        counts[g] += 1;
    }
    let thresholds: Vec<f64> = (0..n_classes)
        .map(|j| if counts[j] > 0 { sums[j] / counts[j] as f64 } else { f64::INFINITY })
        .collect();
    let mut joint = vec![vec![0usize; n_classes]; n_classes];
    let mut assigned = Vec::with_capacity(probs.len());
    for (p, &g) in probs.iter().zip(given) {
        let mut best: Option<usize> = None;
        for j in 0..n_classes {
            if p[j] >= thresholds[j] && best.is_none_or(|b| p[j] > p[b]) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            joint[g][j] += 1;
        }
        assigned.push(best);
    }
    ConfidentJoint {
        counts: joint,
        thresholds,
        assigned,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFilter {
    OverlapRegion,
    NeighborhoodPrune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyCandidate {
    pub row: usize,
    #[serde(rename = "given")]
    pub given_label: String,
    #[serde(rename = "suggested")]
    pub suggested_label: String,
    pub confidence: f64,
    pub filtered_by: Option<NoiseFilter>,
}

#[derive(Debug, Clone)]
pub struct PurityAnalysis {
    pub n_labelled: usize,
    /// Ordered by row.
    pub candidates: Vec<NoisyCandidate>,
    pub joint: Option<ConfidentJoint>,
    pub notes: Vec<String>,
}

impl PurityAnalysis {
    pub fn survivors(&self) -> impl Iterator<Item = &NoisyCandidate> {
        self.candidates.iter().filter(|c| c.filtered_by.is_none())
    }

    pub fn score(&self) -> f64 {
        if self.n_labelled == 0 {
            return 1.0;
        }
        1.0 - self.survivors().count() as f64 / self.n_labelled as f64
    }
}

pub fn detect_noise(ds: &Dataset, cfg: &PurityConfig) -> Result<PurityAnalysis> {
    let labels = Labels::from_dataset(ds)?;
    let n = labels.len();
    if n < cfg.min_rows {
        return Ok(PurityAnalysis {
            n_labelled: n,
            candidates: Vec::new(),
            joint: None,
            notes: vec![format!(
                "label purity needs at least {} labelled rows, found {n}; detection skipped",
                cfg.min_rows
            )],
        });
    }
    if labels.n_classes() < 2 {
        return Ok(PurityAnalysis {
            n_labelled: n,
            candidates: Vec::new(),
            joint: None,
            notes: vec!["a single class cannot carry label noise".into()],
        });
    }
    let est = estimate_probabilities(ds, cfg.folds, cfg.k, cfg.seed)?;
    let c = est.classes.len();
    let joint = confident_joint(&est.probs, &est.given, c);
    let excluded: BTreeSet<usize> = est.excluded_classes.iter().copied().collect();
    let class_sizes = labels.counts();

    // prune by noise rate
    let mut flagged: BTreeSet<usize> = BTreeSet::new();
    for i in 0..c {
        if excluded.contains(&i) {
            continue;
        }
        let row_sum: usize = joint.counts[i].iter().sum();
        if row_sum == 0 {
            continue;
        }
        for j in (0..c).filter(|&j| j != i && !excluded.contains(&j)) {
            let quota = (class_sizes[i] as f64 * joint.counts[i][j] as f64 / row_sum as f64).round() as usize;
            if quota == 0 {
                continue;
            }
            let mut pool: Vec<(f64, usize)> = (0..n)
                .filter(|&p| est.given[p] == i)
                .map(|p| (est.probs[p][j] - est.probs[p][i], p))
                .filter(|(margin, _)| *margin > 0.0)
                .collect();
            pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            flagged.extend(pool.into_iter().take(quota).map(|(_, p)| p));
        }
    }

    let space = HeomSpace::new(ds)?;
    let prune_k = cfg.prune_k.min(n - 1).max(1);
    let nn = space.knn_among(
        &labels.rows,
        &labels.rows,
        NeighborQuery {
            k: prune_k,
            exclude_self: true,
        },
    )?;
    let pos = labels.position_map(ds.n_rows());
    let neighbor_votes = |p: usize| -> Vec<usize> {
        let mut votes = vec![0usize; c];
        for nb in &nn[p] {
            votes[labels.y[pos[nb.row].expect("labelled neighbour")]] += 1;
        }
        votes
    };

    let mut notes = est.warnings.clone();
    let region_rows: BTreeSet<usize> = if cfg.overlap_filter && !flagged.is_empty() {
        match overlap::analyze(ds, &cfg.overlap) {
            Ok(a) => a.regions.member_rows(),
            Err(e) => {
                notes.push(format!("overlap filter skipped: {e}"));
                BTreeSet::new()
            }
        }
    } else {
        BTreeSet::new()
    };

    let mut candidates = Vec::with_capacity(flagged.len());
    for p in flagged {
        let given = est.given[p];
        let probs = &est.probs[p];
        let votes = neighbor_votes(p);
        let top = (0..c)
            .filter(|j| !excluded.contains(j))
            .map(|j| probs[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let suggested = (0..c)
            .filter(|j| !excluded.contains(j) && probs[*j] == top)
            .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(b.cmp(&a)))
            .expect("at least one eligible class");
        if suggested == given {
            continue;
        }
        let row = labels.rows[p];
        let filtered_by = if cfg.overlap_filter && region_rows.contains(&row) {
            Some(NoiseFilter::OverlapRegion)
        } else if cfg.neighborhood_prune && votes[suggested] < votes.iter().copied().max().unwrap_or(0) {
            Some(NoiseFilter::NeighborhoodPrune)
        } else {
            None
        };
        candidates.push(NoisyCandidate {
            row,
            given_label: est.classes[given].clone(),
            suggested_label: est.classes[suggested].clone(),
            confidence: probs[suggested],
            filtered_by,
        });
    }
    Ok(PurityAnalysis {
        n_labelled: n,
        candidates,
        joint: Some(joint),
        notes,
    })
}

pub fn assess_purity(ds: &Dataset, cfg: &PurityConfig) -> Result<Assessment> {
    let analysis = detect_noise(ds, cfg)?;
    let survivors: Vec<&NoisyCandidate> = analysis.survivors().collect();
    let noise_ratio = if analysis.n_labelled == 0 {
        0.0
    } else {
        survivors.len() as f64 / analysis.n_labelled as f64
    };
    let mut explanation = if survivors.is_empty() {
        "No noisy labels were detected.".to_string()
    } else {
        format!(
            "{} of {} labelled rows look mislabelled (noise ratio {:.4}); suggested labels are listed per row.",
            survivors.len(),
            analysis.n_labelled,
            noise_ratio
        )
    };
    for note in &analysis.notes {
        explanation.push(' ');
        explanation.push_str(note);
    }
    let recommendations = if survivors.is_empty() {
        Vec::new()
    } else {
        vec![Recommendation::op(
            "Review the suggested labels and accept or reject each correction, or apply all of them automatically.",
            RemediationOp::CorrectLabels,
            json!({ "rows": survivors.iter().map(|c| c.row).collect::<Vec<_>>() }),
        )]
    };
    Ok(Assessment {
        score: analysis.score(),
        explanation,
        recommendations,
        details: json!({
            "noise_ratio": noise_ratio,
            "noisy_rows": analysis.candidates,
            "candidate_count": analysis.candidates.len(),
            "survivor_count": survivors.len(),
            "confident_joint": analysis.joint.as_ref().map(|j| &j.counts),
            "notes": analysis.notes,
        }),
    })
}

/// Row-level change made by a label correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelChange {
    pub row: usize,
    pub from: String,
    pub to: String,
}

/// Overwrites target labels from a label-purity result.
///
/// With no decisions every surviving candidate is accepted. Decisions may
/// accept any listed candidate, including filtered ones, and may override the
/// suggested label.
pub fn correct_labels(
    ds: &Dataset,
    candidates: &[NoisyCandidate],
    decisions: Option<&[RowDecision]>,
) -> Result<(Dataset, Vec<LabelChange>)> {
    let t = ds.require_target()?;
    let by_row: BTreeMap<usize, &NoisyCandidate> = candidates.iter().map(|c| (c.row, c)).collect();
    let mut accepted: Vec<(usize, String)> = Vec::new();
    match decisions {
        None => {
            accepted.extend(
                candidates
                    .iter()
                    .filter(|c| c.filtered_by.is_none())
                    .map(|c| (c.row, c.suggested_label.clone())),
            );
        }
        Some(ds_decisions) => {
            for d in ds_decisions {
                let cand = by_row
                    .get(&d.row)
                    .ok_or_else(|| Error::invalid(format!("decision for row {} which is not a noise candidate", d.row)))?;
                if d.accept {
                    accepted.push((d.row, d.override_label.clone().unwrap_or_else(|| cand.suggested_label.clone())));
                }
            }
        }
    }
    let kind = ds.columns()[t].kind;
    let mut changes = Vec::new();
    let mut updates: Vec<(usize, usize, Cell)> = Vec::new();
    for (row, label) in accepted {
        if row >= ds.n_rows() {
            return Err(Error::invalid(format!("row {row} out of range")));
        }
        let value = Value::parse_for(kind, &label)?;
        changes.push(LabelChange {
            row,
            from: ds.text_of(row, t).unwrap_or_default(),
            to: label,
        });
        updates.push((row, t, Some(value)));
    }
    Ok((ds.with_cells(updates)?, changes))
}
