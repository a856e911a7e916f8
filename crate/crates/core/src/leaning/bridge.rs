use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::operator::normalize_adjacency;
use super::spread::{label_spread, SpreadConfig};
use super::Label;
use crate::corpus::TweetRecord;
use crate::error::Result;
use crate::graph::{RetweetCounts, WeightedGraph};

/// Users located in `country_a` who simply retweeted at least one user
/// located in `country_b`. Directional.
pub fn bridging_users(
    geo: &BTreeMap<String, String>,
    corpus: &[TweetRecord],
    country_a: &str,
    country_b: &str,
) -> BTreeSet<String> {
    corpus
        .iter()
        .filter_map(|t| {
            let target = t.simple_retweet_of()?;
            let from_a = geo.get(&t.user_id).is_some_and(|c| c == country_a);
            let to_b = geo.get(target).is_some_and(|c| c == country_b);
            (from_a && to_b && t.user_id != target).then(|| t.user_id.clone())
        })
        .collect()
}

/// Attaches bridging users to a country's backbone.
///
/// Every simple retweet between a bridging user and a user located in
/// `country` contributes to an edge; pairs already in the backbone keep
/// their backbone weight.
pub fn augment_with_bridges(
    backbone: &WeightedGraph,
    corpus: &[TweetRecord],
    geo: &BTreeMap<String, String>,
    bridge: &BTreeSet<String>,
    country: &str,
) -> WeightedGraph {
    let mut counts = RetweetCounts::default();
    for t in corpus {
        let Some(target) = t.simple_retweet_of() else {
            continue;
        };
        let located = |u: &str| geo.get(u).is_some_and(|c| c == country);
        let from = t.user_id.as_str();
        if (bridge.contains(from) && located(target)) || (bridge.contains(target) && located(from)) {
            counts.add(from, target);
        }
    }
    let extra = counts.into_graph();
    let mut out = backbone.clone();
    for (u, v, w) in extra.edges() {
        if backbone.weight(u, v).is_none() {
            out.add_edge(u, v, w);
        }
    }
    for s in backbone.seeds() {
        out.add_seed(s);
    }
    out
}

/// Everything needed to re-run spreading in one country.
#[derive(Debug, Clone)]
pub struct CountryModel {
    pub country: String,
    pub graph: WeightedGraph,
    pub seeds: BTreeMap<String, Label>,
    pub spread: SpreadConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DualPrediction {
    /// user → (score in the first country, score in the second).
    pub pairs: BTreeMap<String, (f64, f64)>,
    /// Bridging users left unscored on at least one side.
    pub dropped: usize,
}

/// Spreads independently on both graphs and pairs up each bridging user's
/// two scores.
pub fn dual_predict(
    bridge: &BTreeSet<String>,
    a: &CountryModel,
    b: &CountryModel,
) -> Result<DualPrediction> {
    if bridge.is_empty() {
        return Ok(DualPrediction::default());
    }
    let run = |m: &CountryModel| -> Result<BTreeMap<String, f64>> {
        if m.graph.edge_count() == 0 {
            return Ok(BTreeMap::new());
        }
        let op = normalize_adjacency(&m.graph)?;
        Ok(label_spread(&op, &m.seeds, &m.spread)?.leaning_scores())
    };
    let scores_a = run(a)?;
    let scores_b = run(b)?;
    let mut out = DualPrediction::default();
    for u in bridge {
        match (scores_a.get(u), scores_b.get(u)) {
            (Some(sa), Some(sb)) => {
                out.pairs.insert(u.clone(), (*sa, *sb));
            }
            _ => out.dropped += 1,
        }
    }
    Ok(out)
}
