use serde::Serialize;

use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 50;
pub const KDE_POINTS: usize = 401;
/// Smallest KDE bandwidth: two grid spacings.
pub const MIN_BANDWIDTH: f64 = 2.0 * 2.0 / (KDE_POINTS - 1) as f64;

/// Density sampled on the fixed evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kde {
    pub bandwidth: f64,
    /// `KDE_POINTS` evenly spaced points from -1 to 1.
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub country: String,
    pub n_users: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub n_unclassified: usize,
    pub frac_left: f64,
    pub frac_right: f64,
    pub frac_unclassified: f64,
    /// Counts over `HISTOGRAM_BINS` equal bins spanning [-1, 1]; the last
    /// bin is closed on the right.
    pub histogram: Vec<u64>,
    pub kde: Option<Kde>,
}

pub fn kde_grid() -> Vec<f64> {
    let step = 2.0 / (KDE_POINTS - 1) as f64;
    (0..KDE_POINTS).map(|i| -1.0 + step * i as f64).collect()
}

pub fn histogram(scores: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let per_unit = HISTOGRAM_BINS as f64 / 2.0;
    for &s in scores {
        let bin = (((s + 1.0) * per_unit).floor() as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    counts
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR / 1.34) n^(-1/5)`, falling
/// back to whichever spread is non-zero, then to `MIN_BANDWIDTH`.
pub fn silverman_bandwidth(scores: &[f64]) -> f64 {
    let n = scores.len() as f64;
    if scores.len() < 2 {
        return MIN_BANDWIDTH;
    }
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    (0.9 * spread * n.powf(-0.2)).max(MIN_BANDWIDTH)
}

/// Shifts of the mirror images used for boundary reflection. Reflecting at
/// both -1 and 1 places images at `s + 4k` and `2 - s + 4k`.
const IMAGE_SHIFTS: [f64; 5] = [-8.0, -4.0, 0.0, 4.0, 8.0];

/// Gaussian KDE on [-1, 1] with reflection at both bounds, so mass that
/// would leak past ±1 is folded back and the density integrates to one.
pub fn kde(scores: &[f64]) -> Option<Kde> {
    if scores.is_empty() {
        return None;
    }
    let h = silverman_bandwidth(scores);
    let norm = 1.0 / (scores.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let kernel = |u: f64| (-0.5 * u * u).exp();
    let x = kde_grid();
    let density = x
        .iter()
        .map(|&g| {
            let total: f64 = scores
                .iter()
                .map(|&s| {
                    IMAGE_SHIFTS
                        .iter()
                        .map(|&k| kernel((g - s - k) / h) + kernel((g - (2.0 - s) - k) / h))
                        .sum::<f64>()
                })
                .sum();
            total * norm
        })
        .collect();
    Some(Kde {
        bandwidth: h,
        x,
        density,
    })
}

/// Trapezoid-rule integral of a sampled KDE.
pub fn kde_integral(k: &Kde) -> f64 {
    k.x.windows(2)
        .zip(k.density.windows(2))
        .map(|(x, d)| (x[1] - x[0]) * (d[0] + d[1]) / 2.0)
        .sum()
}

/// Left/right/unclassified fractions, histogram and KDE of one country's
/// scores. Negative scores are left, positive right, exactly 0 unclassified.
pub fn leaning_distribution(scores: &[f64], country: &str) -> Result<DistributionSummary> {
    if scores.is_empty() {
        return Err(Error::InvalidInput(format!("no scored users in {country}")));
    }
    if let Some(bad) = scores.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
        return Err(Error::Domain {
            value: *bad,
            domain: "leaning score in [-1, 1]",
        });
    }
    let n = scores.len();
    let n_left = scores.iter().filter(|s| **s < 0.0).count();
    let n_right = scores.iter().filter(|s| **s > 0.0).count();
    let n_unclassified = n - n_left - n_right;
    let frac = |k: usize| k as f64 / n as f64;
    Ok(DistributionSummary {
        country: country.to_owned(),
        n_users: n,
        n_left,
        n_right,
        n_unclassified,
        frac_left: frac(n_left),
        frac_right: frac(n_right),
        frac_unclassified: frac(n_unclassified),
        histogram: histogram(scores),
        kde: kde(scores),
    })
}
