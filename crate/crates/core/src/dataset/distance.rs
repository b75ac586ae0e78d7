//! Heterogeneous Euclidean-overlap metric and exact k-nearest-neighbour search.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborQuery {
    pub k: usize,
    pub exclude_self: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub row: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Dim {
    /// Values already scaled by the observed range; `None` is missing.
    Numeric(Vec<Option<f64>>),
    Nominal(Vec<Option<u32>>),
}

/// Pre-encoded feature space over a dataset.
#[derive(Debug, Clone)]
pub struct HeomSpace {
    dims: Vec<Dim>,
    n: usize,
}

impl HeomSpace {
    /// All non-target columns.
    pub fn new(ds: &Dataset) -> Result<HeomSpace> {
        Self::from_columns(ds, &ds.feature_indices())
    }

    pub fn from_names(ds: &Dataset, names: &[String]) -> Result<HeomSpace> {
        let cols = names
            .iter()
            .map(|n| ds.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(ds, &cols)
    }

    pub fn from_columns(ds: &Dataset, cols: &[usize]) -> Result<HeomSpace> {
        if cols.is_empty() {
            return Err(Error::invalid("distance needs at least one feature"));
        }
        let dims = cols
            .iter()
            .map(|&c| {
                let schema = &ds.columns()[c];
                if schema.kind.is_nominal() {
                    let mut codes: HashMap<String, u32> = HashMap::new();
                    Dim::Nominal(
                        ds.rows()
                            .iter()
                            .map(|row| {
                                row[c].as_ref().map(|v| {
                                    let next = codes.len() as u32;
                                    *codes.entry(v.to_string()).or_insert(next)
                                })
                            })
                            .collect(),
                    )
                } else {
                    let range = schema.range();
                    let min = match schema.observed_domain {
                        super::ObservedDomain::Range { min, .. } => min,
                        _ => 0.0,
                    };
                    Dim::Numeric(
                        ds.rows()
                            .iter()
                            .map(|row| {
                                row[c].as_ref().and_then(Value::as_f64).map(|x| {
                                    if range > 0.0 {
                                        (x - min) / range
                                    } else {
                                        0.0
                                    }
                                })
                            })
                            .collect(),
                    )
                }
            })
            .collect();
        Ok(HeomSpace { dims, n: ds.n_rows() })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.squared(a, b).sqrt()
    }

    fn squared(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let mut sum = 0.0;
        for dim in &self.dims {
            sum += match dim {
                Dim::Numeric(v) => match (v[a], v[b]) {
                    (Some(x), Some(y)) => (x - y) * (x - y),
                    _ => 1.0,
                },
                Dim::Nominal(v) => match (v[a], v[b]) {
                    (Some(x), Some(y)) if x == y => 0.0,
                    _ => 1.0,
                },
            };
        }
        sum
    }

    /// Neighbours within `rows` (or all rows) for every row of that set.
    pub fn knn(&self, query: NeighborQuery, rows: Option<&[usize]>) -> Result<Vec<Vec<Neighbor>>> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..self.n).collect();
                &all
            }
        };
        self.knn_among(rows, rows, query)
    }

    /// For each query row, its `k` nearest rows from `pool`; ties go to the lower row index.
    pub fn knn_among(&self, queries: &[usize], pool: &[usize], query: NeighborQuery) -> Result<Vec<Vec<Neighbor>>> {
        if query.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let available = if query.exclude_self {
            pool.len().saturating_sub(1)
        } else {
            pool.len()
        };
        if query.k > available {
            return Err(Error::invalid(format!(
                "k={} needs more than {} candidate rows",
                query.k,
                pool.len()
            )));
        }
        Ok(queries
            .par_iter()
            .map(|&q| {
                let mut cands: Vec<(f64, usize)> = pool
                    .iter()
                    .filter(|&&p| !(query.exclude_self && p == q))
                    .map(|&p| (self.squared(q, p), p))
                    .collect();
                let cmp = |a: &(f64, usize), b: &(f64, usize)| {
                    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
                };
                if cands.len() > query.k {
                    cands.select_nth_unstable_by(query.k - 1, cmp);
                    cands.truncate(query.k);
                }
                cands.sort_by(cmp);
                cands
                    .into_iter()
                    .map(|(d, row)| Neighbor { row, distance: d.sqrt() })
                    .collect()
            })
            .collect())
    }
}

/// HEOM distance between two rows over `features` (default: all non-target columns).
pub fn heom_distance(ds: &Dataset, row_a: usize, row_b: usize, features: Option<&[String]>) -> Result<f64> {
    if row_a >= ds.n_rows() || row_b >= ds.n_rows() {
        return Err(Error::invalid("row index out of range"));
    }
    let space = match features {
        Some(f) => HeomSpace::from_names(ds, f)?,
        None => HeomSpace::new(ds)?,
    };
    Ok(space.distance(row_a, row_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnKind;
    use proptest::prelude::*;

    fn numeric_1d(xs: &[f64]) -> Dataset {
        Dataset::from_rows(
            vec![("x".into(), ColumnKind::Numeric)],
            xs.iter().map(|&x| vec![Some(Value::Num(x))]).collect(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn hand_evaluated_distances() {
        let ds = Dataset::from_rows(
            vec![("x".into(), ColumnKind::Numeric), ("c".into(), ColumnKind::Categorical)],
            vec![
                vec![Some(Value::Num(0.0)), Some(Value::Str("a".into()))],
                vec![Some(Value::Num(10.0)), Some(Value::Str("a".into()))],
                vec![Some(Value::Num(2.0)), Some(Value::Str("a".into()))],
                vec![Some(Value::Num(7.0)), Some(Value::Str("a".into()))],
                vec![Some(Value::Num(2.0)), Some(Value::Str("b".into()))],
                vec![None, Some(Value::Str("b".into()))],
            ],
            None,
        )
        .unwrap();
        assert_eq!(heom_distance(&ds, 2, 2, None).unwrap(), 0.0);
        assert_eq!(heom_distance(&ds, 2, 4, None).unwrap(), 1.0);
        assert!((heom_distance(&ds, 2, 3, None).unwrap() - 0.5).abs() < 1e-15);
        // missing numeric contributes 1, categorical equal contributes 0
        assert_eq!(heom_distance(&ds, 4, 5, None).unwrap(), 1.0);
        assert!(heom_distance(&ds, 0, 1, Some(&[])).is_err());
    }

    #[test]
    fn one_dimensional_neighbours() {
        let ds = numeric_1d(&[0.0, 1.0, 10.0]);
        let space = HeomSpace::new(&ds).unwrap();
        let nn = space.knn(NeighborQuery { k: 1, exclude_self: true }, None).unwrap();
        assert_eq!(nn[0][0].row, 1);
        assert_eq!(nn[1][0].row, 0);
        assert_eq!(nn[2][0].row, 1);
    }

    #[test]
    fn duplicate_points_tie_break_by_index() {
        let ds = numeric_1d(&[5.0, 5.0, 5.0, 9.0]);
        let space = HeomSpace::new(&ds).unwrap();
        let nn = space.knn(NeighborQuery { k: 2, exclude_self: true }, None).unwrap();
        assert_eq!(nn[2].iter().map(|n| n.row).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(nn[2][0].distance, 0.0);
    }

    #[test]
    fn k_too_large_is_an_error() {
        let ds = numeric_1d(&[1.0, 2.0, 3.0, 4.0]);
        let space = HeomSpace::new(&ds).unwrap();
        assert!(space.knn(NeighborQuery { k: 5, exclude_self: true }, None).is_err());
        assert!(space.knn(NeighborQuery { k: 4, exclude_self: true }, None).is_err());
        assert_eq!(space.knn(NeighborQuery { k: 3, exclude_self: true }, None).unwrap()[0].len(), 3);
    }

    proptest! {
        #[test]
        fn symmetric_with_zero_diagonal(
            xs in proptest::collection::vec((-50.0f64..50.0, 0u8..3, proptest::option::of(0.0f64..1.0)), 50)
        ) {
            let rows = xs
                .iter()
                .map(|(x, c, m)| vec![Some(Value::Num(*x)), Some(Value::Str(format!("c{c}"))), m.map(Value::Num)])
                .collect();
            let ds = Dataset::from_rows(
                vec![("x".into(), ColumnKind::Numeric), ("c".into(), ColumnKind::Categorical), ("m".into(), ColumnKind::Numeric)],
                rows,
                None,
            ).unwrap();
            let space = HeomSpace::new(&ds).unwrap();
            for a in 0..ds.n_rows() {
                prop_assert_eq!(space.distance(a, a), 0.0);
                for b in 0..ds.n_rows() {
                    prop_assert_eq!(space.distance(a, b), space.distance(b, a));
                }
            }
        }
    }
}
