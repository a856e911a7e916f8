use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// `D^{-1/2} W D^{-1/2}` in compressed sparse row form.
///
/// Rows and columns follow the graph's sorted node order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedOperator {
    users: Vec<String>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedOperator {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.users
            .binary_search_by(|u| u.as_str().cmp(user))
            .ok()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn entry(&self, u: &str, v: &str) -> f64 {
        match (self.index_of(u), self.index_of(v)) {
            (Some(i), Some(j)) => self
                .row(i)
                .find(|(c, _)| *c == j)
                .map_or(0.0, |(_, val)| val),
            _ => 0.0,
        }
    }

    /// `out = self * x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len());
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *slot = acc;
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        m
    }
}

/// Builds the symmetric normalized adjacency of `g`.
pub fn normalize_adjacency(g: &WeightedGraph) -> Result<NormalizedOperator> {
    let users: Vec<String> = g.nodes().iter().cloned().collect();
    let index: BTreeMap<&str, usize> = users
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();

    let mut strength = vec![0.0f64; users.len()];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); users.len()];
    for (u, v, w) in g.edges() {
        let (i, j) = (index[u], index[v]);
        let w = w as f64;
        strength[i] += w;
        strength[j] += w;
        rows[i].push((j, w));
        rows[j].push((i, w));
    }
    if let Some(i) = strength.iter().position(|&s| s <= 0.0) {
        return Err(Error::Degenerate(format!(
            "node {} has zero strength",
            users[i]
        )));
    }
    let inv_sqrt: Vec<f64> = strength.iter().map(|s| 1.0 / s.sqrt()).collect();

    let mut row_ptr = Vec::with_capacity(users.len() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for (i, mut row) in rows.into_iter().enumerate() {
        row.sort_unstable_by_key(|(j, _)| *j);
        for (j, w) in row {
            cols.push(j);
            vals.push(w * (inv_sqrt[i] * inv_sqrt[j]));
        }
        row_ptr.push(cols.len());
    }
    Ok(NormalizedOperator {
        users,
        row_ptr,
        cols,
        vals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 4);
        let s = normalize_adjacency(&g).unwrap();
        assert_eq!(s.entry("a", "b"), 1.0);
        assert_eq!(s.entry("a", "a"), 0.0);
    }

    #[test]
    fn path_graph() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 1);
        g.add_edge("b", "c", 1);
        let s = normalize_adjacency(&g).unwrap();
        let expected = 1.0 / 2f64.sqrt();
        assert!((s.entry("a", "b") - expected).abs() < 1e-15);
        assert!((s.entry("c", "b") - expected).abs() < 1e-15);
        assert_eq!(s.nnz(), 4);
    }

    #[test]
    fn symmetric() {
        let mut g = WeightedGraph::new();
        g.add_edge("a", "b", 3);
        g.add_edge("b", "c", 1);
        g.add_edge("a", "c", 7);
        let d = normalize_adjacency(&g).unwrap().to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }
}
