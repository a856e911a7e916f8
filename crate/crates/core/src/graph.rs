//! Within-country retweet networks and their disparity-filter backbone.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};

/// Undirected weighted user graph. Edge keys are stored as `(u, v)` with
/// `u < v`; weights are retweet counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
    seeds: BTreeSet<String>,
}

fn edge_key(u: &str, v: &str) -> (String, String) {
    if u < v {
        (u.to_owned(), v.to_owned())
    } else {
        (v.to_owned(), u.to_owned())
    }
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight` to the edge between `u` and `v`. Self-loops and zero
    /// weights are ignored; returns whether anything was added.
    pub fn add_edge(&mut self, u: &str, v: &str, weight: u64) -> bool {
        if u == v || weight == 0 {
            return false;
        }
        self.nodes.insert(u.to_owned());
        self.nodes.insert(v.to_owned());
        *self.edges.entry(edge_key(u, v)).or_insert(0) += weight;
        true
    }

    /// Marks a node as a seed. Unknown users are ignored.
    pub fn add_seed(&mut self, user: &str) -> bool {
        if self.nodes.contains(user) {
            self.seeds.insert(user.to_owned())
        } else {
            false
        }
    }

    pub fn set_seeds<'a, I: IntoIterator<Item = &'a str>>(&mut self, users: I) {
        self.seeds.clear();
        for u in users {
            self.add_seed(u);
        }
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn seeds(&self) -> &BTreeSet<String> {
        &self.seeds
    }

    pub fn is_seed(&self, user: &str) -> bool {
        self.seeds.contains(user)
    }

    pub fn contains_node(&self, user: &str) -> bool {
        self.nodes.contains(user)
    }

    pub fn weight(&self, u: &str, v: &str) -> Option<u64> {
        self.edges.get(&edge_key(u, v)).copied()
    }

    /// Edges in canonical `(u, v, weight)` order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges
            .iter()
            .map(|((u, v), w)| (u.as_str(), v.as_str(), *w))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Strength (sum of incident weights) and degree per node.
    pub fn strength_degree(&self) -> BTreeMap<&str, (u64, usize)> {
        let mut out: BTreeMap<&str, (u64, usize)> =
            self.nodes.iter().map(|n| (n.as_str(), (0, 0))).collect();
        for (u, v, w) in self.edges() {
            for x in [u, v] {
                let e = out.get_mut(x).expect("edge endpoint is a node");
                e.0 += w;
                e.1 += 1;
            }
        }
        out
    }

    /// Adjacent `(neighbor, weight)` lists, neighbors sorted.
    pub fn adjacency(&self) -> BTreeMap<&str, Vec<(&str, u64)>> {
        let mut adj: BTreeMap<&str, Vec<(&str, u64)>> =
            self.nodes.iter().map(|n| (n.as_str(), Vec::new())).collect();
        for (u, v, w) in self.edges() {
            adj.get_mut(u).expect("node").push((v, w));
            adj.get_mut(v).expect("node").push((u, w));
        }
        for list in adj.values_mut() {
            list.sort_unstable();
        }
        adj
    }

    /// Relabels nodes through `f`, keeping weights and seeds.
    pub fn relabel(&self, mut f: impl FnMut(&str) -> String) -> WeightedGraph {
        let map: BTreeMap<&str, String> = self.nodes.iter().map(|n| (n.as_str(), f(n))).collect();
        let mut g = WeightedGraph::new();
        for n in map.values() {
            g.nodes.insert(n.clone());
        }
        for (u, v, w) in self.edges() {
            g.add_edge(&map[u], &map[v], w);
        }
        for s in &self.seeds {
            g.seeds.insert(map[s.as_str()].clone());
        }
        g
    }

    pub fn write_csv(&self, edges_path: &Path, seeds_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(edges_path).map_err(|e| Error::csv(edges_path, e))?;
        w.write_record(["u", "v", "weight"])
            .map_err(|e| Error::csv(edges_path, e))?;
        for (u, v, weight) in self.edges() {
            w.write_record([u, v, &weight.to_string()])
                .map_err(|e| Error::csv(edges_path, e))?;
        }
        w.flush().map_err(|e| Error::io(edges_path, e))?;

        let file = File::create(seeds_path).map_err(|e| Error::io(seeds_path, e))?;
        let mut out = BufWriter::new(file);
        for s in &self.seeds {
            writeln!(out, "{s}").map_err(|e| Error::io(seeds_path, e))?;
        }
        out.flush().map_err(|e| Error::io(seeds_path, e))
    }

    pub fn read_csv(edges_path: &Path, seeds_path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            u: String,
            v: String,
            weight: u64,
        }
        let mut g = WeightedGraph::new();
        let mut r = csv::Reader::from_path(edges_path).map_err(|e| Error::csv(edges_path, e))?;
        for row in r.deserialize::<Row>() {
            let row = row.map_err(|e| Error::csv(edges_path, e))?;
            if row.weight == 0 || row.u == row.v {
                return Err(Error::InvalidInput(format!(
                    "{}: invalid edge {},{},{}",
                    edges_path.display(),
                    row.u,
                    row.v,
                    row.weight
                )));
            }
            g.add_edge(&row.u, &row.v, row.weight);
        }
        let file = File::open(seeds_path).map_err(|e| Error::io(seeds_path, e))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(seeds_path, e))?;
            let user = line.trim();
            if !user.is_empty() {
                g.add_seed(user);
            }
        }
        Ok(g)
    }
}

/// Mergeable retweet counter keyed by unordered user pair.
#[derive(Debug, Clone, Default)]
pub struct RetweetCounts {
    counts: BTreeMap<(String, String), u64>,
}

impl RetweetCounts {
    pub fn add(&mut self, u: &str, v: &str) {
        if u != v {
            *self.counts.entry(edge_key(u, v)).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: RetweetCounts) {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
    }

    pub fn into_graph(self) -> WeightedGraph {
        let mut g = WeightedGraph::new();
        for ((u, v), w) in self.counts {
            g.add_edge(&u, &v, w);
        }
        g
    }
}

/// Counts simple retweets between users located in `country`.
///
/// Quote tweets and retweets involving a user located elsewhere (or not
/// located at all) are ignored. Both directions of retweeting add to the
/// same undirected edge.
pub fn build_network(
    corpus: &[TweetRecord],
    geo: &BTreeMap<String, String>,
    country: &str,
) -> WeightedGraph {
    let mut counts = RetweetCounts::default();
    for t in corpus {
        let Some(target) = t.simple_retweet_of() else {
            continue;
        };
        let here = |u: &str| geo.get(u).is_some_and(|c| c == country);
        if here(&t.user_id) && here(target) {
            counts.add(&t.user_id, target);
        }
    }
    counts.into_graph()
}

/// Disparity-filter significance of an edge carrying share `p` of the
/// strength of an endpoint with degree `k`: `(1 - p)^(k - 1)`.
///
/// A degree-1 endpoint has p-value 1.
pub fn disparity_pvalue(p: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            value: p,
            domain: "[0, 1]",
        });
    }
    if k == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    if k == 1 {
        return Ok(1.0);
    }
    let exp = i32::try_from(k - 1).unwrap_or(i32::MAX);
    Ok((1.0 - p).powi(exp).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub significance_threshold: f64,
    pub keep_seed_seed_edges: bool,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            significance_threshold: 0.05,
            keep_seed_seed_edges: true,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.significance_threshold;
        if t > 0.0 && t < 1.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                value: t,
                domain: "(0, 1)",
            })
        }
    }
}

/// Keeps edges significant from at least one endpoint (p-value strictly
/// below the threshold), plus seed-seed edges when configured. Nodes left
/// without edges are dropped.
pub fn extract_backbone(g: &WeightedGraph, cfg: &BackboneConfig) -> Result<WeightedGraph> {
    cfg.validate()?;
    let sd = g.strength_degree();
    let significant_from = |x: &str, w: u64| -> Result<bool> {
        let (s, k) = sd[x];
        let p = w as f64 / s as f64;
        Ok(disparity_pvalue(p, k)? < cfg.significance_threshold)
    };

    let mut out = WeightedGraph::new();
    for (u, v, w) in g.edges() {
        let seed_pair = cfg.keep_seed_seed_edges && g.is_seed(u) && g.is_seed(v);
        if seed_pair || significant_from(u, w)? || significant_from(v, w)? {
            out.add_edge(u, v, w);
        }
    }
    for s in g.seeds() {
        out.add_seed(s);
    }
    Ok(out)
}
