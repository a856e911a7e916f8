use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use medialean::corpus::TweetRecord;
use medialean::geo::{geotag_users, merge_locations, GeoSource};
use medialean::graph::{extract_backbone, BackboneConfig, WeightedGraph};
use medialean::leaning::{label_spread, normalize_adjacency, Label, SpreadConfig};
use medialean::media::{audience_reach, Profiles, UserDomains};
use medialean::report::{histogram, kde, kde_integral, leaning_distribution, pearson, reach_heatmap};

fn node(i: usize) -> String {
    format!("n{i:03}")
}

/// Path 0-1-...-(n-1) plus arbitrary extra edges, so the graph is connected.
fn connected_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
    (3usize..40).prop_flat_map(|n| {
        let path = proptest::collection::vec(1u64..10, n - 1);
        let extra = proptest::collection::vec((0..n, 0..n, 1u64..10), 0..2 * n);
        (Just(n), path, extra).prop_map(|(n, path, extra)| {
            let mut edges: Vec<(usize, usize, u64)> =
                path.into_iter().enumerate().map(|(i, w)| (i, i + 1, w)).collect();
            edges.extend(extra);
            (n, edges)
        })
    })
}

fn build(edges: &[(usize, usize, u64)]) -> WeightedGraph {
    let mut g = WeightedGraph::new();
    for &(u, v, w) in edges {
        g.add_edge(&node(u), &node(v), w);
    }
    g
}

fn tweet(id: usize, user: &str, place: Option<&str>) -> TweetRecord {
    TweetRecord {
        tweet_id: id.to_string(),
        user_id: user.to_owned(),
        timestamp: id as i64,
        lang: "en".into(),
        text: String::new(),
        hashtags: Vec::new(),
        urls: Vec::new(),
        place_country: place.map(str::to_owned),
        retweeted_user_id: None,
        is_quote: false,
        profile_location: None,
    }
}

proptest! {
    #[test]
    fn flipping_seed_labels_negates_scores(
        (n, edges) in connected_graph(),
        picks in proptest::collection::vec((0usize..40, any::<bool>()), 2..10),
        alpha in 0.05f64..0.95,
    ) {
        let g = build(&edges);
        let op = normalize_adjacency(&g).unwrap();
        let seeds: BTreeMap<String, Label> = picks
            .iter()
            .map(|(i, right)| (node(i % n), if *right { Label::Right } else { Label::Left }))
            .collect();
        let flipped: BTreeMap<String, Label> = seeds.iter().map(|(u, l)| (u.clone(), l.flipped())).collect();
        let cfg = SpreadConfig::with_alpha(alpha);
        let a = label_spread(&op, &seeds, &cfg).unwrap().leaning_scores();
        let b = label_spread(&op, &flipped, &cfg).unwrap().leaning_scores();
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
        for (u, s) in &a {
            prop_assert!((-1.0..=1.0).contains(s));
            prop_assert_eq!(*s, -b[u]);
        }
    }

    #[test]
    fn backbone_is_a_subgraph(
        (_, edges) in connected_graph(),
        seed_ids in proptest::collection::btree_set(0usize..40, 0..8),
        threshold in 0.01f64..0.5,
        keep in any::<bool>(),
    ) {
        let mut g = build(&edges);
        for s in &seed_ids {
            g.add_seed(&node(*s));
        }
        let cfg = BackboneConfig { significance_threshold: threshold, keep_seed_seed_edges: keep };
        let b = extract_backbone(&g, &cfg).unwrap();
        for (u, v, w) in b.edges() {
            prop_assert_eq!(g.weight(u, v), Some(w));
        }
        prop_assert!(b.nodes().is_subset(g.nodes()));
        prop_assert!(b.seeds().is_subset(g.seeds()));
        prop_assert!(b.seeds().is_subset(b.nodes()));
        for n in b.nodes() {
            prop_assert!(b.edges().any(|(u, v, _)| u == n || v == n));
        }
    }

    #[test]
    fn geotags_ignore_record_order(
        tags in proptest::collection::vec((0usize..20, prop::sample::select(vec!["US", "GB", "CA"])), 1..80),
        rotate in 0usize..80,
    ) {
        let corpus: Vec<TweetRecord> = tags
            .iter()
            .enumerate()
            .map(|(i, (u, c))| tweet(i, &format!("u{u}"), Some(c)))
            .collect();
        let mut shuffled = corpus.clone();
        shuffled.rotate_left(rotate % corpus.len());
        shuffled.reverse();
        prop_assert_eq!(geotag_users(&corpus), geotag_users(&shuffled));
    }

    #[test]
    fn merge_prefers_geotags(
        tagged in proptest::collection::btree_map(0usize..30, prop::sample::select(vec!["US", "GB"]), 0..20),
        parsed in proptest::collection::btree_map(0usize..30, prop::sample::select(vec!["CA", "GB"]), 0..20),
    ) {
        let as_map = |m: &BTreeMap<usize, &str>| -> BTreeMap<String, String> {
            m.iter().map(|(u, c)| (format!("u{u}"), c.to_string())).collect()
        };
        let (t, p) = (as_map(&tagged), as_map(&parsed));
        let merged = merge_locations(&t, &p);
        let users: BTreeSet<&String> = t.keys().chain(p.keys()).collect();
        prop_assert_eq!(merged.len(), users.len());
        for g in &merged {
            match (t.get(&g.user_id), p.get(&g.user_id)) {
                (Some(c), Some(_)) => {
                    prop_assert_eq!(&g.country, c);
                    prop_assert_eq!(g.source, GeoSource::Merged);
                }
                (Some(c), None) => prop_assert_eq!(&g.country, c),
                (None, Some(c)) => prop_assert_eq!(&g.country, c),
                (None, None) => prop_assert!(false, "unexpected user {}", g.user_id),
            }
        }
    }

    #[test]
    fn reach_partitions_over_countries(
        shares in proptest::collection::vec((0usize..25, 0usize..6), 1..120),
        countries in proptest::collection::vec(prop::sample::select(vec!["US", "GB", "CA"]), 25),
        scores in proptest::collection::vec(-1.0f64..=1.0, 25),
    ) {
        let mut ud = UserDomains::new();
        for (u, d) in &shares {
            ud.insert(&format!("u{u}"), &format!("d{d}.com"));
        }
        let scored: BTreeMap<String, (String, f64)> = (0..25)
            .map(|u| (format!("u{u}"), (countries[u].to_owned(), scores[u])))
            .collect();
        let profiles = Profiles::build(&ud, &scored);
        for d in 0..6 {
            let domain = format!("d{d}.com");
            let distinct: BTreeSet<usize> = shares.iter().filter(|s| s.1 == d).map(|s| s.0).collect();
            let total = audience_reach(&profiles, &domain, None);
            prop_assert_eq!(total, distinct.len());
            let by_country: usize = ["US", "GB", "CA"]
                .iter()
                .map(|c| audience_reach(&profiles, &domain, Some(c)))
                .sum();
            prop_assert_eq!(by_country, total);
        }
        let cs = vec!["US".to_string(), "GB".to_string(), "CA".to_string()];
        let mut domains: Vec<String> = (0..6).map(|d| format!("d{d}.com")).collect();
        domains.push("unshared.com".into());
        let mut per_country: BTreeMap<String, usize> = BTreeMap::new();
        for c in &countries {
            *per_country.entry(c.to_string()).or_default() += 1;
        }
        let h = reach_heatmap(&profiles, &domains, &cs, &per_country);
        for (d, row) in h.domains.iter().zip(&h.values) {
            for v in row {
                prop_assert!((0.0..=1.0).contains(v));
            }
            if d == "unshared.com" {
                prop_assert!(row.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn distribution_counts_and_density(scores in proptest::collection::vec(-1.0f64..=1.0, 1..300)) {
        let h = histogram(&scores);
        prop_assert_eq!(h.iter().sum::<u64>(), scores.len() as u64);
        let d = leaning_distribution(&scores, "US").unwrap();
        prop_assert_eq!(d.n_left + d.n_right + d.n_unclassified, d.n_users);
        prop_assert_eq!(d.n_users, scores.len());
        let k = kde(&scores).unwrap();
        prop_assert!((kde_integral(&k) - 1.0).abs() < 1e-3, "integral {}", kde_integral(&k));
        prop_assert!(k.density.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn pearson_sign_flips_with_negation(
        pts in proptest::collection::vec((-50i32..50, -50i32..50), 3..40),
        scale in 0.1f64..10.0,
        shift in -10.0f64..10.0,
    ) {
        let x: Vec<f64> = pts.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pts.iter().map(|p| f64::from(p.1)).collect();
        if let Ok(r) = pearson(&x, &y) {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert_eq!(pearson(&x, &neg).unwrap().coefficient, -r.coefficient);
            let affine: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            prop_assert!((pearson(&affine, &y).unwrap().coefficient - r.coefficient).abs() <= 1e-12);
        }
    }
}
