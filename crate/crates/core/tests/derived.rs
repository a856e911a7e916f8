use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use medialean::graph::WeightedGraph;
use medialean::leaning::normalize_adjacency;
use medialean::media::{Profiles, UserDomains};
use medialean::report::{validate_against, CorrelationKind, ExternalScoreFile, ScoreKind};

#[test]
fn operator_spectral_radius_at_most_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let n = 50;
        let mut g = WeightedGraph::new();
        for v in 1..n {
            g.add_edge(&format!("{}", rng.random_range(0..v)), &format!("{v}"), rng.random_range(1..=9));
        }
        for _ in 0..100 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            g.add_edge(&format!("{a}"), &format!("{b}"), rng.random_range(1..=9));
        }
        let s = normalize_adjacency(&g).unwrap().to_dense();
        // Power iteration on S^2 bounds the largest |eigenvalue| of S from
        // below by its Rayleigh quotient.
        let mul = |x: &[f64]| -> Vec<f64> {
            (0..n).map(|i| (0..n).map(|j| s[i][j] * x[j]).sum()).collect()
        };
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let y = mul(&mul(&x));
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            lambda = y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|v| v * v).sum::<f64>();
            x = y.iter().map(|v| v / norm).collect();
        }
        let radius = lambda.sqrt();
        assert!(radius <= 1.0 + 1e-9, "spectral radius {radius}");
        assert!(radius > 0.99, "connected graph should reach 1, got {radius}");
    }
}

fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn noisy_external_scores_correlate_within_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut ud = UserDomains::new();
    let mut scores = BTreeMap::new();
    let mut user = 0usize;
    for d in 0..40 {
        let center: f64 = rng.random_range(-0.8..0.8);
        for _ in 0..60 {
            let u = format!("u{user}");
            user += 1;
            let s: f64 = (center + rng.random_range(-0.2..0.2)).clamp(-1.0, 1.0);
            scores.insert(u.clone(), ("US".to_string(), s));
            ud.insert(&u, &format!("d{d}.com"));
        }
    }
    let profiles = Profiles::build(&ud, &scores);
    let entries: BTreeMap<String, f64> = profiles
        .iter()
        .map(|p| (p.domain.clone(), p.mean_leaning + noise.sample(&mut rng)))
        .collect();
    let ext = ExternalScoreFile {
        source_name: "noisy".into(),
        kind: ScoreKind::Numeric,
        entries,
    };
    let report = validate_against(&profiles, &ext, "US", 50).unwrap();
    assert_eq!(report.kind, CorrelationKind::Pearson);
    assert_eq!(report.n_overlap, 40);
    assert_eq!(report.coverage, 1.0);
    let ours: Vec<f64> = report.points.iter().map(|p| p.1).collect();
    let theirs: Vec<f64> = report.points.iter().map(|p| p.2).collect();
    let oracle = textbook_pearson(&ours, &theirs);
    assert!((report.coefficient - oracle).abs() < 1e-12, "{} vs {oracle}", report.coefficient);
    assert!((0.95..0.995).contains(&oracle), "r {oracle} outside band");
    assert!(report.p_value < 1e-10);
}
