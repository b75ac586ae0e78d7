//! Class overlap detection.
//!
//! Each labelled row is tagged by the share of its k nearest neighbours that
//! carry a different label: full agreement (FA), partial disagreement (PD) or
//! full disagreement (FD). PD rows that are neighbours of each other are then
//! joined into connected overlap regions, which drive the score and are
//! explained through per-feature ranges over their members.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{Dataset, HeomSpace, Labels, NeighborQuery, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    pub k: usize,
    pub theta_low: f64,
    pub theta_high: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            k: 5,
            theta_low: 0.3,
            theta_high: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgreementTag {
    FA,
    PD,
    FD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisagreementTag {
    pub row: usize,
    pub disagreement: f64,
    pub tag: AgreementTag,
}

impl DisagreementTag {
    pub fn classify(disagreement: f64, cfg: &OverlapConfig) -> AgreementTag {
        if disagreement < cfg.theta_low {
            AgreementTag::FA
        } else if disagreement < cfg.theta_high {
            AgreementTag::PD
        } else {
            AgreementTag::FD
        }
    }
}

/// Tags plus the neighbour lists that produced them.
#[derive(Debug, Clone)]
pub struct Tagging {
    pub k: usize,
    /// One per labelled row, ordered by row index.
    pub tags: Vec<DisagreementTag>,
    /// Dataset-row neighbour lists, parallel to `tags`.
    pub neighbors: Vec<Vec<usize>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureRange {
    Numeric { min: f64, max: f64 },
    Values(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRegion {
    pub id: usize,
    #[serde(rename = "member_rows")]
    pub members: Vec<usize>,
    #[serde(rename = "classes")]
    pub classes_present: BTreeSet<String>,
    pub feature_ranges: BTreeMap<String, FeatureRange>,
}

#[derive(Debug, Clone, Default)]
pub struct Regions {
    pub regions: Vec<OverlapRegion>,
    /// PD rows that did not join a multi-class component.
    pub isolated_pd: Vec<usize>,
}

impl Regions {
    pub fn member_rows(&self) -> BTreeSet<usize> {
        self.regions.iter().flat_map(|r| r.members.iter().copied()).collect()
    }
}

/// Tags every labelled row by neighbour disagreement.
pub fn tag_disagreement(ds: &Dataset, cfg: &OverlapConfig) -> Result<Tagging> {
    let labels = Labels::from_dataset(ds)?;
    tag_with_labels(ds, &labels, cfg)
}

pub(crate) fn tag_with_labels(ds: &Dataset, labels: &Labels, cfg: &OverlapConfig) -> Result<Tagging> {
    if cfg.k == 0 {
        return Err(Error::invalid("overlap k must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.theta_low) || cfg.theta_low > cfg.theta_high {
        return Err(Error::invalid("overlap thresholds must satisfy 0 <= theta_low <= theta_high"));
    }
    if labels.n_classes() < 2 {
        return Ok(Tagging {
            k: cfg.k,
            tags: labels
                .rows
                .iter()
                .map(|&row| DisagreementTag {
                    row,
                    disagreement: 0.0,
                    tag: AgreementTag::FA,
                })
                .collect(),
            neighbors: vec![Vec::new(); labels.len()],
            note: Some("overlap undefined for one class".into()),
        });
    }
    if labels.len() <= cfg.k {
        return Err(Error::invalid(format!(
            "overlap analysis needs more than k={} labelled rows, found {}",
            cfg.k,
            labels.len()
        )));
    }
    let space = HeomSpace::new(ds)?;
    let pos = labels.position_map(ds.n_rows());
    let nn = space.knn_among(
        &labels.rows,
        &labels.rows,
        NeighborQuery {
            k: cfg.k,
            exclude_self: true,
        },
    )?;
    let mut tags = Vec::with_capacity(labels.len());
    let mut neighbors = Vec::with_capacity(labels.len());
    for (i, list) in nn.into_iter().enumerate() {
        let own = labels.y[i];
        let differing = list.iter().filter(|n| pos[n.row].map(|p| labels.y[p]) != Some(own)).count();
        let disagreement = differing as f64 / cfg.k as f64;
        tags.push(DisagreementTag {
            row: labels.rows[i],
            disagreement,
            tag: DisagreementTag::classify(disagreement, cfg),
        });
        neighbors.push(list.into_iter().map(|n| n.row).collect());
    }
    Ok(Tagging {
        k: cfg.k,
        tags,
        neighbors,
        note: None,
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Joins PD rows that appear in each other's neighbourhoods into regions.
///
/// An edge links two PD rows when either lists the other as a neighbour.
/// Components with at least two members spanning at least two classes become
/// regions; every other PD row is reported as isolated.
pub fn propagate_regions(ds: &Dataset, tagging: &Tagging) -> Result<Regions> {
    let pd: Vec<usize> = tagging
        .tags
        .iter()
        .enumerate()
        .filter(|(_, t)| t.tag == AgreementTag::PD)
        .map(|(i, _)| i)
        .collect();
    if pd.is_empty() {
        return Ok(Regions::default());
    }
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    for (s, &i) in pd.iter().enumerate() {
        slot.insert(tagging.tags[i].row, s);
    }
    let mut uf = UnionFind((0..pd.len()).collect());
    for (s, &i) in pd.iter().enumerate() {
        for nb in &tagging.neighbors[i] {
            if let Some(&t) = slot.get(nb) {
                uf.union(s, t);
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..pd.len() {
        let root = uf.find(s);
        components.entry(root).or_default().push(tagging.tags[pd[s]].row);
    }
    let target = ds.require_target()?;
    let mut comps: Vec<Vec<usize>> = components.into_values().collect();
    for c in &mut comps {
        c.sort_unstable();
    }
    comps.sort_by_key(|c| c[0]);

    let mut out = Regions::default();
    for members in comps {
        let classes: BTreeSet<String> = members.iter().filter_map(|&r| ds.text_of(r, target)).collect();
        if members.len() >= 2 && classes.len() >= 2 {
            let feature_ranges = feature_ranges(ds, &members);
            out.regions.push(OverlapRegion {
                id: out.regions.len(),
                members,
                classes_present: classes,
                feature_ranges,
            });
        } else {
            out.isolated_pd.extend(members);
        }
    }
    out.isolated_pd.sort_unstable();
    Ok(out)
}

fn feature_ranges(ds: &Dataset, members: &[usize]) -> BTreeMap<String, FeatureRange> {
    let mut out = BTreeMap::new();
    for c in ds.feature_indices() {
        let col = &ds.columns()[c];
        let range = if col.kind.is_nominal() {
            FeatureRange::Values(members.iter().filter_map(|&r| ds.text_of(r, c)).collect())
        } else {
            let vals: Vec<f64> = members.iter().filter_map(|&r| ds.cell(r, c).and_then(Value::as_f64)).collect();
            if vals.is_empty() {
                continue;
            }
            FeatureRange::Numeric {
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        };
        out.insert(col.name.clone(), range);
    }
    out
}

/// Full overlap analysis: tags, regions and the derived score.
#[derive(Debug, Clone)]
pub struct OverlapAnalysis {
    pub tagging: Tagging,
    pub regions: Regions,
    pub n_labelled: usize,
    pub score: f64,
}

impl OverlapAnalysis {
    pub fn fd_rows(&self) -> Vec<usize> {
        self.tagging
            .tags
            .iter()
            .filter(|t| t.tag == AgreementTag::FD)
            .map(|t| t.row)
            .collect()
    }
}

pub fn analyze(ds: &Dataset, cfg: &OverlapConfig) -> Result<OverlapAnalysis> {
    let labels = Labels::from_dataset(ds)?;
    if labels.is_empty() {
        return Err(Error::invalid("target column has no values"));
    }
    let tagging = tag_with_labels(ds, &labels, cfg)?;
    let regions = propagate_regions(ds, &tagging)?;
    let in_regions = regions.member_rows().len();
    let score = 1.0 - in_regions as f64 / labels.len() as f64;
    Ok(OverlapAnalysis {
        tagging,
        regions,
        n_labelled: labels.len(),
        score,
    })
}

pub fn assess_overlap(ds: &Dataset, cfg: &OverlapConfig) -> Result<Assessment> {
    let analysis = analyze(ds, cfg)?;
    let target = ds.require_target()?;
    if let Some(note) = &analysis.tagging.note {
        return Ok(Assessment::abstain(note.clone()));
    }
    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    for region in &analysis.regions.regions {
        for &r in &region.members {
            if let Some(l) = ds.text_of(r, target) {
                *per_class.entry(l).or_default() += 1;
            }
        }
    }
    let fd_rows = analysis.fd_rows();
    let n_members: usize = analysis.regions.regions.iter().map(|r| r.members.len()).sum();
    let explanation = if analysis.regions.regions.is_empty() {
        "No overlapping class regions were found.".to_string()
    } else {
        format!(
            "{} of {} labelled rows lie in {} overlapping class region(s); see feature_ranges for the value ranges involved.",
            n_members,
            analysis.n_labelled,
            analysis.regions.regions.len()
        )
    };
    let mut recommendations = Vec::new();
    if !analysis.regions.regions.is_empty() {
        recommendations.push(Recommendation::advisory(
            "Transform the features listed in the region feature ranges to separate the overlapping classes.",
            json!({ "region_ids": analysis.regions.regions.iter().map(|r| r.id).collect::<Vec<_>>() }),
        ));
    }
    if !fd_rows.is_empty() {
        recommendations.push(Recommendation::op(
            "Rows in full disagreement with their neighbourhood are label noise candidates; review them with label purity.",
            RemediationOp::CorrectLabels,
            json!({ "fd_rows": fd_rows }),
        ));
    }
    Ok(Assessment {
        score: analysis.score,
        explanation,
        recommendations,
        details: json!({
            "k": cfg.k,
            "theta_low": cfg.theta_low,
            "theta_high": cfg.theta_high,
            "regions": analysis.regions.regions,
            "fd_rows": fd_rows,
            "isolated_pd_rows": analysis.regions.isolated_pd,
            "per_class_overlap_counts": per_class,
        }),
    })
}
