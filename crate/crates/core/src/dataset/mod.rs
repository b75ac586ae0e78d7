//! Immutable typed tables.
//!
//! A [`Dataset`] holds row-major optional cells under an ordered schema. Every
//! transformation returns a fresh dataset with a recomputed content
//! fingerprint, so results and lineage entries can be pinned to exact data.

mod csv_io;
mod distance;
mod folds;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use csv_io::{LoadOptions, DEFAULT_MISSING_TOKENS};
pub use distance::{heom_distance, HeomSpace, Neighbor, NeighborQuery};
pub use folds::{stratified_folds, Folds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Text,
}

impl ColumnKind {
    /// Categorical and text columns compare by equality only.
    pub fn is_nominal(self) -> bool {
        !matches!(self, ColumnKind::Numeric)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Text => "text",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Str(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            Value::Num(_) => None,
        }
    }

    /// Parses a raw string for a column of the given kind.
    pub fn parse_for(kind: ColumnKind, raw: &str) -> Result<Value> {
        match kind {
            ColumnKind::Numeric => parse_number(raw)
                .map(Value::Num)
                .ok_or_else(|| Error::invalid(format!("'{raw}' is not a finite number"))),
            _ => Ok(Value::Str(raw.to_string())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

pub type Cell = Option<Value>;

pub(crate) fn parse_number(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObservedDomain {
    Empty,
    Range { min: f64, max: f64 },
    Values { values: BTreeSet<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub observed_domain: ObservedDomain,
    pub missing_count: usize,
}

impl ColumnSchema {
    /// Numeric range width; zero for non-numeric or empty columns.
    pub fn range(&self) -> f64 {
        match self.observed_domain {
            ObservedDomain::Range { min, max } => max - min,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<ColumnSchema>,
    rows: Vec<Vec<Cell>>,
    target: Option<usize>,
    fingerprint: String,
}

impl Dataset {
    /// Builds a dataset from a typed schema and rows.
    ///
    /// Numeric columns must hold `Value::Num`, the others `Value::Str`.
    pub fn from_rows(
        schema: Vec<(String, ColumnKind)>,
        rows: Vec<Vec<Cell>>,
        target: Option<&str>,
    ) -> Result<Dataset> {
        let mut seen = BTreeSet::new();
        for (name, _) in &schema {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate column name '{name}'")));
            }
        }
        let target = match target {
            Some(t) => Some(
                schema
                    .iter()
                    .position(|(n, _)| n == t)
                    .ok_or_else(|| Error::UnknownColumn(t.to_string()))?,
            ),
            None => None,
        };
        let kinds: Vec<ColumnKind> = schema.iter().map(|(_, k)| *k).collect();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::invalid(format!(
                    "row {i} has {} cells, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
            for (c, cell) in row.iter().enumerate() {
                match (kinds[c], cell) {
                    (_, None) => {}
                    (ColumnKind::Numeric, Some(Value::Num(x))) if x.is_finite() => {}
                    (ColumnKind::Numeric, Some(v)) => {
                        return Err(Error::invalid(format!(
                            "row {i}, column '{}': '{v}' is not a finite number",
                            schema[c].0
                        )))
                    }
                    (_, Some(Value::Str(_))) => {}
                    (_, Some(Value::Num(_))) => {
                        return Err(Error::invalid(format!(
                            "row {i}, column '{}': numeric value in {} column",
                            schema[c].0, kinds[c]
                        )))
                    }
                }
            }
        }
        Ok(Self::assemble(schema, rows, target))
    }

    fn assemble(schema: Vec<(String, ColumnKind)>, rows: Vec<Vec<Cell>>, target: Option<usize>) -> Dataset {
        let columns = schema
            .into_iter()
            .enumerate()
            .map(|(c, (name, kind))| {
                let mut missing = 0;
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut values = BTreeSet::new();
                for row in &rows {
                    match &row[c] {
                        None => missing += 1,
                        Some(Value::Num(x)) => {
                            min = min.min(*x);
                            max = max.max(*x);
                        }
                        Some(Value::Str(s)) => {
                            values.insert(s.clone());
                        }
                    }
                }
                let observed_domain = if missing == rows.len() {
                    ObservedDomain::Empty
                } else if kind == ColumnKind::Numeric {
                    ObservedDomain::Range { min, max }
                } else {
                    ObservedDomain::Values { values }
                };
                ColumnSchema {
                    name,
                    kind,
                    observed_domain,
                    missing_count: missing,
                }
            })
            .collect::<Vec<_>>();
        let fingerprint = fingerprint_of(&columns, &rows, target);
        Dataset {
            columns,
            rows,
            target,
            fingerprint,
        }
    }

    /// Same schema and target, new cells.
    pub fn with_rows(&self, rows: Vec<Vec<Cell>>) -> Result<Dataset> {
        Dataset::from_rows(self.schema(), rows, self.target_name())
    }

    pub fn schema(&self) -> Vec<(String, ColumnKind)> {
        self.columns.iter().map(|c| (c.name.clone(), c.kind)).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn row(&self, r: usize) -> &[Cell] {
        &self.rows[r]
    }

    pub fn cell(&self, r: usize, c: usize) -> Option<&Value> {
        self.rows[r][c].as_ref()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&ColumnSchema> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target.map(|t| self.columns[t].name.as_str())
    }

    pub fn require_target(&self) -> Result<usize> {
        self.target.ok_or(Error::TargetRequired)
    }

    /// Every column except the target, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&c| Some(c) != self.target).collect()
    }

    /// Non-target numeric columns.
    pub fn numeric_features(&self) -> Vec<usize> {
        self.feature_indices()
            .into_iter()
            .filter(|&c| self.columns[c].kind == ColumnKind::Numeric)
            .collect()
    }

    /// Rendered string for a cell, if present.
    pub fn text_of(&self, r: usize, c: usize) -> Option<String> {
        self.cell(r, c).map(|v| v.to_string())
    }

    /// Numeric view of a column.
    pub fn numeric_column(&self, c: usize) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|row| row[c].as_ref().and_then(Value::as_f64))
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let picked = rows.iter().map(|&r| self.rows[r].clone()).collect();
        self.with_rows(picked)
    }

    /// Drops the given rows, preserving the order of the rest.
    pub fn drop_rows(&self, drop: &BTreeSet<usize>) -> Result<Dataset> {
        let kept = self
            .rows
            .iter()
            .enumerate()
            .filter(|(r, _)| !drop.contains(r))
            .map(|(_, row)| row.clone())
            .collect();
        self.with_rows(kept)
    }

    pub fn append_rows(&self, extra: Vec<Vec<Cell>>) -> Result<Dataset> {
        let mut rows = self.rows.clone();
        rows.extend(extra);
        self.with_rows(rows)
    }

    pub fn drop_columns(&self, names: &[String]) -> Result<Dataset> {
        let mut drop = BTreeSet::new();
        for name in names {
            let idx = self.column_index(name)?;
            if Some(idx) == self.target {
                return Err(Error::invalid(format!("cannot drop the target column '{name}'")));
            }
            drop.insert(idx);
        }
        let keep: Vec<usize> = (0..self.columns.len()).filter(|c| !drop.contains(c)).collect();
        let schema = keep
            .iter()
            .map(|&c| (self.columns[c].name.clone(), self.columns[c].kind))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| keep.iter().map(|&c| row[c].clone()).collect())
            .collect();
        Dataset::from_rows(schema, rows, self.target_name())
    }

    /// Replaces individual cells.
    pub fn with_cells(&self, updates: impl IntoIterator<Item = (usize, usize, Cell)>) -> Result<Dataset> {
        let mut rows = self.rows.clone();
        for (r, c, cell) in updates {
            if r >= rows.len() || c >= self.columns.len() {
                return Err(Error::invalid(format!("cell ({r}, {c}) out of bounds")));
            }
            rows[r][c] = cell;
        }
        self.with_rows(rows)
    }

    /// Column kinds keyed by name, suitable as load overrides.
    pub fn kind_map(&self) -> BTreeMap<String, ColumnKind> {
        self.columns.iter().map(|c| (c.name.clone(), c.kind)).collect()
    }
}

fn fingerprint_of(columns: &[ColumnSchema], rows: &[Vec<Cell>], target: Option<usize>) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(b"C");
        h.update((c.name.len() as u64).to_le_bytes());
        h.update(c.name.as_bytes());
        h.update(c.kind.to_string().as_bytes());
    }
    match target {
        Some(t) => {
            h.update(b"T");
            h.update((t as u64).to_le_bytes());
        }
        None => h.update(b"-"),
    }
    for row in rows {
        h.update(b"R");
        for cell in row {
            match cell {
                None => h.update(b"M"),
                Some(Value::Num(x)) => {
                    h.update(b"N");
                    h.update(x.to_bits().to_le_bytes());
                }
                Some(Value::Str(s)) => {
                    h.update(b"S");
                    h.update((s.len() as u64).to_le_bytes());
                    h.update(s.as_bytes());
                }
            }
        }
    }
    hex::encode(h.finalize())
}

/// Class labels of the rows that carry a target value.
#[derive(Debug, Clone)]
pub struct Labels {
    /// Sorted distinct labels; a class index points into this list.
    pub classes: Vec<String>,
    /// Dataset rows with a non-missing target, ascending.
    pub rows: Vec<usize>,
    /// Class index of each entry in `rows`.
    pub y: Vec<usize>,
}

impl Labels {
    pub fn from_dataset(ds: &Dataset) -> Result<Labels> {
        let t = ds.require_target()?;
        let mut rows = Vec::new();
        let mut raw = Vec::new();
        for r in 0..ds.n_rows() {
            if let Some(v) = ds.text_of(r, t) {
                rows.push(r);
                raw.push(v);
            }
        }
        let classes: Vec<String> = raw.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let y = raw
            .iter()
            .map(|v| classes.binary_search(v).expect("label collected above"))
            .collect();
        Ok(Labels { classes, rows, y })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &y in &self.y {
            counts[y] += 1;
        }
        counts
    }

    /// Maps dataset rows to their position in `rows`.
    pub fn position_map(&self, n_rows: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; n_rows];
        for (i, &r) in self.rows.iter().enumerate() {
            map[r] = Some(i);
        }
        map
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }
}
