//! Format consistency of text columns.

mod program;
mod synth;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use program::{tokenize, CaseMode, Instruction, LookupTable, TransformProgram};
pub use synth::{synthesize_program, Annotation, Pair, MAX_DEPTH};

use crate::dataset::{ColumnKind, Dataset, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::{Error, Result};

const REPRESENTATIVES: usize = 3;

/// Character-class shape of a value, e.g. `"2020-01-01"` becomes `"d+-d+-d+"`.
pub fn signature_of(value: &str) -> String {
    let mut out = String::new();
    let mut last: Option<char> = None;
    for ch in value.chars() {
        let class = if ch.is_ascii_digit() {
            Some('d')
        } else if ch.is_uppercase() {
            Some('u')
        } else if ch.is_lowercase() {
            Some('l')
        } else if ch.is_whitespace() {
            Some('s')
        } else {
            None
        };
        match class {
            Some(c) if last == Some(c) => {}
            Some(c) => {
                out.push(c);
                out.push('+');
                last = Some(c);
            }
            None => {
                out.push(ch);
                last = None;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatCluster {
    pub signature: String,
    pub size: usize,
    /// Up to three distinct values, most frequent first.
    pub representatives: Vec<String>,
    #[serde(rename = "member_rows")]
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnHomogeneity {
    pub column: String,
    pub score: f64,
    pub clusters: Vec<FormatCluster>,
}

/// Clusters the non-missing cells of a column by signature, largest first.
pub fn cluster_column(ds: &Dataset, col: usize) -> Vec<FormatCluster> {
    let mut groups: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for r in 0..ds.n_rows() {
        if let Some(text) = ds.text_of(r, col) {
            groups.entry(signature_of(&text)).or_default().push((r, text));
        }
    }
    let mut clusters: Vec<FormatCluster> = groups
        .into_iter()
        .map(|(signature, members)| {
            let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
            for (_, v) in &members {
                *freq.entry(v.as_str()).or_default() += 1;
            }
            let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            FormatCluster {
                signature,
                size: members.len(),
                representatives: ranked.iter().take(REPRESENTATIVES).map(|(v, _)| v.to_string()).collect(),
                members: members.iter().map(|(r, _)| *r).collect(),
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.size.cmp(&a.size).then_with(|| a.signature.cmp(&b.signature)));
    clusters
}

/// Simpson concentration of cluster sizes; 1 for an empty column.
pub fn simpson_lambda(sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return 1.0;
    }
    sizes.iter().map(|&s| (s as f64 / n as f64).powi(2)).sum()
}

pub fn analyzed_columns(ds: &Dataset) -> Vec<usize> {
    ds.feature_indices()
        .into_iter()
        .filter(|&c| matches!(ds.columns()[c].kind, ColumnKind::Text | ColumnKind::Categorical))
        .collect()
}

pub fn analyze_homogeneity(ds: &Dataset) -> Vec<ColumnHomogeneity> {
    analyzed_columns(ds)
        .into_par_iter()
        .map(|c| {
            let clusters = cluster_column(ds, c);
            let sizes: Vec<usize> = clusters.iter().map(|k| k.size).collect();
            ColumnHomogeneity {
                column: ds.columns()[c].name.clone(),
                score: simpson_lambda(&sizes),
                clusters,
            }
        })
        .collect()
}

pub fn assess_homogeneity(ds: &Dataset) -> Result<Assessment> {
    let columns = analyze_homogeneity(ds);
    if columns.is_empty() {
        return Ok(Assessment::abstain("no text or categorical columns to check for format consistency"));
    }
    let score = columns.iter().map(|c| c.score).fold(1.0, f64::min);
    let mixed: Vec<&ColumnHomogeneity> = columns.iter().filter(|c| c.clusters.len() > 1).collect();
    let explanation = if mixed.is_empty() {
        "Every text column uses a single format.".to_string()
    } else {
        let names: Vec<String> = mixed
            .iter()
            .map(|c| format!("{} ({} formats, λ = {:.3})", c.column, c.clusters.len(), c.score))
            .collect();
        format!("Mixed formats in {}.", names.join(", "))
    };
    let recommendations = mixed
        .iter()
        .map(|c| {
            Recommendation::op(
                format!(
                    "Annotate source and target samples for column '{}' and apply the synthesized transformation.",
                    c.column
                ),
                RemediationOp::ApplyTransform,
                json!({
                    "column": c.column,
                    "dominant_signature": c.clusters[0].signature,
                    "source_signatures": c.clusters[1..].iter().map(|k| &k.signature).collect::<Vec<_>>(),
                }),
            )
        })
        .collect();
    let details: serde_json::Map<String, serde_json::Value> = columns
        .iter()
        .map(|c| (c.column.clone(), json!({ "score": c.score, "clusters": c.clusters })))
        .collect();
    Ok(Assessment {
        score,
        explanation,
        recommendations,
        details: json!({ "columns": details }),
    })
}

/// Rewrites every member of `cluster` with `program`; either all cells change or none do.
pub fn apply_transform(
    ds: &Dataset,
    column: &str,
    cluster: &FormatCluster,
    program: &TransformProgram,
    target_signature: &str,
) -> Result<Dataset> {
    let col = ds.column_index(column)?;
    if ds.target_index() == Some(col) {
        return Err(Error::invalid(format!("cannot transform the target column '{column}'")));
    }
    let kind = ds.columns()[col].kind;
    if kind == ColumnKind::Numeric {
        return Err(Error::invalid(format!("column '{column}' is numeric")));
    }
    let mut updates = Vec::with_capacity(cluster.members.len());
    let mut offending = Vec::new();
    for &r in &cluster.members {
        let Some(text) = (r < ds.n_rows()).then(|| ds.text_of(r, col)).flatten() else {
            offending.push(r);
            continue;
        };
        if signature_of(&text) != cluster.signature {
            offending.push(r);
            continue;
        }
        match program.apply(&text) {
            Some(out) if signature_of(&out) == target_signature => {
                updates.push((r, col, Some(Value::Str(out))));
            }
            _ => offending.push(r),
        }
    }
    if !offending.is_empty() {
        return Err(Error::TransformAborted { rows: offending });
    }
    ds.with_cells(updates)
}

/// What one annotation did to its column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformOutcome {
    pub column: String,
    pub source_signature: String,
    pub target_signature: String,
    pub program: TransformProgram,
    pub rows_changed: Vec<usize>,
}

/// Synthesizes a program from the annotation and applies it to the matching cluster.
pub fn transform_column(ds: &Dataset, annotation: &Annotation) -> Result<(Dataset, TransformOutcome)> {
    let col = ds.column_index(&annotation.column)?;
    let source_signature = annotation.source_signature()?;
    let target_signature = annotation.target_signature()?;
    let program = synthesize_program(annotation)?;
    for pair in &annotation.pairs {
        assert_eq!(
            program.apply(&pair.source).as_deref(),
            Some(pair.target.as_str()),
            "synthesized program must reproduce its annotation"
        );
    }
    let cluster = cluster_column(ds, col)
        .into_iter()
        .find(|c| c.signature == source_signature)
        .unwrap_or(FormatCluster {
            signature: source_signature.clone(),
            size: 0,
            representatives: Vec::new(),
            members: Vec::new(),
        });
    let out = apply_transform(ds, &annotation.column, &cluster, &program, &target_signature)?;
    Ok((
        out,
        TransformOutcome {
            column: annotation.column.clone(),
            source_signature,
            target_signature,
            program,
            rows_changed: cluster.members,
        },
    ))
}
