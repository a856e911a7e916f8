use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operator::NormalizedOperator;
use super::spread::{label_spread, SpreadConfig};
use super::Label;
use crate::error::{Error, Result};

/// Default shuffle seed for fold assignment.
pub const CV_SHUFFLE_SEED: u64 = 20_200_313;

/// 0.05, 0.10, ..., 0.95.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| f64::from(i) / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub cv_accuracy: f64,
    /// Mean held-out accuracy for every grid value, in grid order.
    pub grid: Vec<(f64, f64)>,
}

/// Stratified fold assignment: each class is sorted by user id, shuffled
/// with the given seed and dealt round-robin into folds.
fn assign_folds(
    seeds: &BTreeMap<String, Label>,
    folds: usize,
    shuffle_seed: u64,
) -> Vec<Vec<(String, Label)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut out = vec![Vec::new(); folds];
    for class in [Label::Left, Label::Right] {
        let mut members: Vec<&String> = seeds
            .iter()
            .filter(|(_, l)| **l == class)
            .map(|(u, _)| u)
            .collect();
        members.shuffle(&mut rng);
        for (i, u) in members.into_iter().enumerate() {
            out[i % folds].push((u.clone(), class));
        }
    }
    out
}

fn held_out_accuracy(
    op: &NormalizedOperator,
    seeds: &BTreeMap<String, Label>,
    fold: &[(String, Label)],
    cfg: &SpreadConfig,
) -> Result<f64> {
    let mut train = seeds.clone();
    for (u, _) in fold {
        train.remove(u);
    }
    let scores = label_spread(op, &train, cfg)?.leaning_scores();
    let correct = fold
        .iter()
        .filter(|(u, label)| {
            scores.get(u).is_some_and(|s| match label {
                Label::Left => *s < 0.0,
                Label::Right => *s > 0.0,
            })
        })
        .count();
    Ok(correct as f64 / fold.len() as f64)
}

/// Picks alpha from `grid` by k-fold cross-validation over the seeds.
///
/// Accuracy is the share of held-out seeds whose score has the sign of their
/// label; unscored and zero-scored seeds count as misses. The grid value with
/// the highest mean accuracy wins, ties going to the smallest alpha.
pub fn select_alpha(
    op: &NormalizedOperator,
    seeds: &BTreeMap<String, Label>,
    folds: usize,
    grid: &[f64],
    base: &SpreadConfig,
    shuffle_seed: u64,
) -> Result<AlphaSelection> {
    if folds < 2 {
        return Err(Error::InvalidInput("need at least two folds".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty alpha grid".into()));
    }
    let present: BTreeMap<String, Label> = seeds
        .iter()
        .filter(|(u, _)| op.index_of(u).is_some())
        .map(|(u, l)| (u.clone(), *l))
        .collect();
    for class in [Label::Left, Label::Right] {
        let n = present.values().filter(|l| **l == class).count();
        if n < folds {
            return Err(Error::InvalidInput(format!(
                "{n} {class:?} seeds in graph, need at least {folds} for {folds}-fold CV"
            )));
        }
    }

    let fold_sets = assign_folds(&present, folds, shuffle_seed);
    let mut scored = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let cfg = SpreadConfig { alpha, ..*base };
        let mut total = 0.0;
        for fold in &fold_sets {
            total += held_out_accuracy(op, &present, fold, &cfg)?;
        }
        scored.push((alpha, total / folds as f64));
    }

    let mut best = scored[0];
    for &(alpha, acc) in &scored[1..] {
        if acc > best.1 || (acc == best.1 && alpha < best.0) {
            best = (alpha, acc);
        }
    }
    Ok(AlphaSelection {
        alpha: best.0,
        cv_accuracy: best.1,
        grid: scored,
    })
}
