use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::operator::NormalizedOperator;
use super::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadConfig {
    /// Weight on neighbor information, strictly between 0 and 1.
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            tolerance: 1e-10,
            max_iterations: 1000,
        }
    }
}

impl SpreadConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain {
                value: self.alpha,
                domain: "alpha in (0, 1)",
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain {
                value: self.tolerance,
                domain: "tolerance > 0",
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Converged two-column label mass per node.
#[derive(Debug, Clone)]
pub struct SpreadResult {
    users: Vec<String>,
    left: Vec<f64>,
    right: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl SpreadResult {
    pub fn users(&self) -> &[String] {
        &self.users
    }

    /// `(f_left, f_right)` per node, in operator order.
    pub fn columns(&self) -> (&[f64], &[f64]) {
        (&self.left, &self.right)
    }

    /// `f_right / (f_left + f_right)` for every reachable node.
    pub fn raw_scores(&self) -> BTreeMap<String, f64> {
        self.reachable()
            .map(|(u, l, r)| (u.clone(), r / (l + r)))
            .collect()
    }

    /// Scores on [-1, 1]: `(f_right - f_left) / (f_left + f_right)`, which
    /// equals `2 * raw - 1` and is exactly antisymmetric under swapping the
    /// seed labels.
    pub fn leaning_scores(&self) -> BTreeMap<String, f64> {
        self.reachable()
            .map(|(u, l, r)| (u.clone(), (r - l) / (l + r)))
            .collect()
    }

    fn reachable(&self) -> impl Iterator<Item = (&String, f64, f64)> {
        self.users
            .iter()
            .zip(self.left.iter().zip(&self.right))
            .filter(|(_, (l, r))| **l + **r > 0.0)
            .map(|(u, (l, r))| (u, *l, *r))
    }
}

/// Iterates `F <- alpha S F + (1 - alpha) Y` from `F = Y` until the largest
/// entry change drops below the tolerance.
///
/// Seeds missing from the operator are ignored.
pub fn label_spread(
    op: &NormalizedOperator,
    seeds: &BTreeMap<String, Label>,
    cfg: &SpreadConfig,
) -> Result<SpreadResult> {
    cfg.validate()?;
    let n = op.len();
    let mut y_left = vec![0.0; n];
    let mut y_right = vec![0.0; n];
    let mut sides = (false, false);
    for (user, label) in seeds {
        if let Some(i) = op.index_of(user) {
            match label {
                Label::Left => {
                    y_left[i] = 1.0;
                    sides.0 = true;
                }
                Label::Right => {
                    y_right[i] = 1.0;
                    sides.1 = true;
                }
            }
        }
    }
    if !(sides.0 && sides.1) {
        log::warn!("label spreading with seeds on one side only");
    }

    let horizon = seed_horizon(op, &y_left, &y_right);
    let alpha = cfg.alpha;
    let keep = 1.0 - alpha;
    let mut left = y_left.clone();
    let mut right = y_right.clone();
    let mut next_left = vec![0.0; n];
    let mut next_right = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for it in 1..=cfg.max_iterations {
        op.mul_vec(&left, &mut next_left);
        op.mul_vec(&right, &mut next_right);
        residual = 0.0f64;
        for i in 0..n {
            let l = alpha * next_left[i] + keep * y_left[i];
            let r = alpha * next_right[i] + keep * y_right[i];
            residual = residual
                .max((l - left[i]).abs())
                .max((r - right[i]).abs());
            next_left[i] = l;
            next_right[i] = r;
        }
        std::mem::swap(&mut left, &mut next_left);
        std::mem::swap(&mut right, &mut next_right);
        if residual < cfg.tolerance && it >= horizon {
            return Ok(SpreadResult {
                users: op.users().to_vec(),
                left,
                right,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        residual,
    })
}

/// Hops from the seed set to the farthest node reachable from it. Mass
/// moves one hop per iteration, so stopping earlier would leave reachable
/// nodes at zero.
fn seed_horizon(op: &NormalizedOperator, y_left: &[f64], y_right: &[f64]) -> usize {
    let mut dist = vec![usize::MAX; op.len()];
    let mut queue = std::collections::VecDeque::new();
    for i in 0..op.len() {
        if y_left[i] > 0.0 || y_right[i] > 0.0 {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    let mut far = 0;
    while let Some(i) = queue.pop_front() {
        far = dist[i];
        for (j, _) in op.row(i) {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    far
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::leaning::normalize_adjacency;

    fn seeds(pairs: &[(&str, Label)]) -> BTreeMap<String, Label> {
        pairs.iter().map(|(u, l)| (u.to_string(), *l)).collect()
    }

    #[test]
    fn lone_left_seed() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 2);
        let op = normalize_adjacency(&g).unwrap();
        let res = label_spread(&op, &seeds(&[("a", Label::Left)]), &SpreadConfig::default()).unwrap();
        let raw = res.raw_scores();
        assert_eq!(raw["a"], 0.0);
        assert_eq!(raw["b"], 0.0);
        assert_eq!(res.leaning_scores()["b"], -1.0);
    }

    #[test]
    fn symmetric_path() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 1);
        g.add_edge("b", "c", 1);
        let op = normalize_adjacency(&g).unwrap();
        let s = seeds(&[("a", Label::Left), ("c", Label::Right)]);
        let res = label_spread(&op, &s, &SpreadConfig::with_alpha(0.7)).unwrap();
        assert_eq!(res.raw_scores()["b"], 0.5);
        assert_eq!(res.leaning_scores()["b"], 0.0);
    }

    #[test]
    fn long_path_fully_scored_at_small_alpha() {
        let mut g = WeightedGraph::new();
        for i in 0..60 {
            g.add_edge(&format!("n{i:02}"), &format!("n{:02}", i + 1), 1);
        }
        let op = normalize_adjacency(&g).unwrap();
        let s = seeds(&[("n00", Label::Left), ("n05", Label::Right)]);
        let res = label_spread(&op, &s, &SpreadConfig::with_alpha(0.05)).unwrap();
        let scores = res.leaning_scores();
        assert_eq!(scores.len(), 61);
        assert!(scores["n60"] > 0.0);
        assert!(res.iterations >= 55);
    }

    #[test]
    fn unreachable_nodes_unscored() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 1);
        g.add_edge("x", "y", 1);
        let op = normalize_adjacency(&g).unwrap();
        let res = label_spread(&op, &seeds(&[("a", Label::Right)]), &SpreadConfig::default()).unwrap();
        let scores = res.leaning_scores();
        assert_eq!(scores.len(), 2);
        assert!(!scores.contains_key("x"));
    }

    #[test]
    fn non_convergence_reports_residual() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 1);
        g.add_edge("b", "c", 1);
        let op = normalize_adjacency(&g).unwrap();
        let cfg = SpreadConfig { alpha: 0.99, tolerance: 1e-14, max_iterations: 3 };
        match label_spread(&op, &seeds(&[("a", Label::Left)]), &cfg) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn alpha_must_be_open_unit() {
        let g = {
            let mut g = WeightedGraph::new();
            g.add_edge("a", "b", 1);
            g
        };
        let op = normalize_adjacency(&g).unwrap();
        for alpha in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(label_spread(&op, &BTreeMap::new(), &SpreadConfig::with_alpha(alpha)).is_err());
        }
    }
}
