use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Folds {
    /// Row indices per fold, ascending within each fold.
    pub folds: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Splits all rows into `folds` stratified by target value.
///
/// Rows with a missing target form their own stratum. A class with fewer
/// members than `folds` is spread over as many folds as it has members.
pub fn stratified_folds(ds: &Dataset, seed: u64, folds: usize) -> Result<Folds> {
    let t = ds.require_target()?;
    if folds == 0 {
        return Err(Error::invalid("folds must be positive"));
    }
    let mut strata: BTreeMap<Option<String>, Vec<usize>> = BTreeMap::new();
    for r in 0..ds.n_rows() {
        strata.entry(ds.text_of(r, t)).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut warnings = Vec::new();
    let mut offset = 0;
    for (label, mut members) in strata {
        if members.len() < folds {
            warnings.push(format!(
                "class {} has {} members; using {} folds for it",
                label.as_deref().unwrap_or("<missing>"),
                members.len(),
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        for (j, r) in members.iter().enumerate() {
            out[(offset + j) % folds].push(*r);
        }
        offset = (offset + members.len()) % folds;
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(Folds { folds: out, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnKind, Value};

    fn labelled(labels: &[&str]) -> Dataset {
        Dataset::from_rows(
            vec![("x".into(), ColumnKind::Numeric), ("y".into(), ColumnKind::Categorical)],
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| vec![Some(Value::Num(i as f64)), Some(Value::Str(l.to_string()))])
                .collect(),
            Some("y"),
        )
        .unwrap()
    }

    #[test]
    fn exact_stratification() {
        let ds = labelled(&["a", "a", "a", "b", "b", "b", "c", "c", "c"]);
        let f = stratified_folds(&ds, 7, 3).unwrap();
        assert!(f.warnings.is_empty());
        for fold in &f.folds {
            let mut labels: Vec<String> = fold.iter().map(|&r| ds.text_of(r, 1).unwrap()).collect();
            labels.sort();
            assert_eq!(labels, vec!["a", "b", "c"]);
        }
    }

    #[test]
    fn deterministic_and_partitioning() {
        let ds = labelled(&["a", "b", "a", "b", "a", "a", "b", "a", "b", "b", "a"]);
        let f1 = stratified_folds(&ds, 42, 4).unwrap();
        let f2 = stratified_folds(&ds, 42, 4).unwrap();
        assert_eq!(f1, f2);
        let mut all: Vec<usize> = f1.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..ds.n_rows()).collect::<Vec<_>>());
    }

    #[test]
    fn small_class_falls_back() {
        let mut labels = vec!["a"; 20];
        labels.extend(["b", "b"]);
        let ds = labelled(&labels);
        let f = stratified_folds(&ds, 1, 5).unwrap();
        assert_eq!(f.warnings.len(), 1);
        assert!(f.warnings[0].contains("using 2 folds"));
        let folds_with_b = f
            .folds
            .iter()
            .filter(|fold| fold.iter().any(|&r| r >= 20))
            .count();
        assert_eq!(folds_with_b, 2);
    }

    #[test]
    fn target_required() {
        let ds = labelled(&["a", "b"]);
        let no_target = Dataset::from_rows(ds.schema(), ds.rows().to_vec(), None).unwrap();
        assert!(stratified_folds(&no_target, 0, 2).is_err());
    }
}
