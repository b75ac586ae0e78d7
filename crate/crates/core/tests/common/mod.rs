//! Seeded synthetic datasets shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dqkit_core::{ColumnKind, Dataset, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn num(x: f64) -> Option<Value> {
    Some(Value::Num(x))
}

pub fn text(s: &str) -> Option<Value> {
    Some(Value::Str(s.to_string()))
}

pub fn class_name(i: usize) -> String {
    format!("c{i}")
}

/// 2-D isotropic Gaussian classes with unit variance; row order is shuffled.
pub fn gaussian_points(seed: u64, per_class: &[usize], means: &[[f64; 2]]) -> Vec<([f64; 2], usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut pts = Vec::new();
    for (c, (&n, m)) in per_class.iter().zip(means).enumerate() {
        for _ in 0..n {
            pts.push(([m[0] + noise.sample(&mut rng), m[1] + noise.sample(&mut rng)], c));
        }
    }
    pts.shuffle(&mut rng);
    pts
}

pub fn points_dataset(pts: &[([f64; 2], usize)]) -> Dataset {
    let rows = pts
        .iter()
        .map(|(p, c)| vec![num(p[0]), num(p[1]), text(&class_name(*c))])
        .collect();
    Dataset::from_rows(
        vec![
            ("x".into(), ColumnKind::Numeric),
            ("y".into(), ColumnKind::Numeric),
            ("label".into(), ColumnKind::Categorical),
        ],
        rows,
        Some("label"),
    )
    .unwrap()
}

/// Flips `fraction` of each class to a uniformly chosen other class.
/// Returns the noisy points and the flipped rows.
pub fn flip_labels(
    seed: u64,
    pts: &[([f64; 2], usize)],
    n_classes: usize,
    fraction: f64,
) -> (Vec<([f64; 2], usize)>, BTreeSet<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = pts.to_vec();
    let mut flipped = BTreeSet::new();
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..pts.len()).filter(|&r| pts[r].1 == c).collect();
        members.shuffle(&mut rng);
        let quota = (members.len() as f64 * fraction).round() as usize;
        for &r in &members[..quota] {
            let mut to = rng.random_range(0..n_classes - 1);
            if to >= c {
                to += 1;
            }
            out[r].1 = to;
            flipped.insert(r);
        }
    }
    (out, flipped)
}

/// Two separated classes plus `fraction` of all points moved into a band
/// straddling the boundary between them. Returns the points and the moved rows.
pub fn injected_overlap(seed: u64, n: usize, fraction: f64) -> (Vec<([f64; 2], usize)>, BTreeSet<usize>) {
    let half = n / 2;
    let mut pts = gaussian_points(seed, &[half, n - half], &[[-5.0, 0.0], [5.0, 0.0]]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0fe1);
    let mut injected = BTreeSet::new();
    for c in 0..2 {
        let mut members: Vec<usize> = (0..pts.len()).filter(|&r| pts[r].1 == c).collect();
        members.shuffle(&mut rng);
        let quota = (members.len() as f64 * fraction).round() as usize;
        for &r in &members[..quota] {
            pts[r].0 = [rng.random_range(-1.0..1.0), rng.random_range(-2.5..2.5)];
            injected.insert(r);
        }
    }
    (pts, injected)
}

pub fn precision_recall(found: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> (f64, f64) {
    let hit = found.intersection(truth).count() as f64;
    let precision = if found.is_empty() { 1.0 } else { hit / found.len() as f64 };
    let recall = if truth.is_empty() { 1.0 } else { hit / truth.len() as f64 };
    (precision, recall)
}
