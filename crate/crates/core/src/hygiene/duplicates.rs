use std::collections::{BTreeSet, HashSet};

use serde_json::json;

use crate::dataset::{Dataset, Value};
use crate::engine::{Assessment, Recommendation, RemediationOp};
use crate::error::Result;

#[derive(PartialEq, Eq, Hash)]
enum CellKey<'a> {
    Missing,
    Num(u64),
    Str(&'a str),
}

fn key(cell: Option<&Value>) -> CellKey<'_> {
    match cell {
        None => CellKey::Missing,
        // +0.0 and -0.0 compare equal
        Some(Value::Num(x)) => CellKey::Num(if *x == 0.0 { 0 } else { x.to_bits() }),
        Some(Value::Str(s)) => CellKey::Str(s),
    }
}

/// Every occurrence of a row after its first.
pub fn duplicate_rows(ds: &Dataset) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..ds.n_rows())
        .filter(|&r| {
            let k: Vec<CellKey> = ds.row(r).iter().map(|c| key(c.as_ref())).collect();
            !seen.insert(k)
        })
        .collect()
}

pub fn assess_duplicates(ds: &Dataset) -> Result<Assessment> {
    let dups = duplicate_rows(ds);
    let n = ds.n_rows();
    let score = if n == 0 { 1.0 } else { 1.0 - dups.len() as f64 / n as f64 };
    let explanation = if dups.is_empty() {
        "No duplicates found.".to_string()
    } else {
        format!("{} of {n} rows repeat an earlier row.", dups.len())
    };
    let recommendations = if dups.is_empty() {
        Vec::new()
    } else {
        vec![Recommendation::op(
            "Remove repeated rows, keeping first occurrences.",
            RemediationOp::RemoveDuplicates,
            json!({ "rows": dups }),
        )]
    };
    Ok(Assessment {
        score,
        explanation,
        recommendations,
        details: json!({ "duplicate_rows": dups }),
    })
}

pub fn remove_duplicates(ds: &Dataset) -> Result<Dataset> {
    let drop: BTreeSet<usize> = duplicate_rows(ds).into_iter().collect();
    ds.drop_rows(&drop)
}
