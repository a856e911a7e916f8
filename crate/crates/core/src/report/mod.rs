//! Report data: leaning distributions, language shares, domain rankings,
//! audience profiles, the reach heatmap and external validations.

mod distribution;
mod external;
mod rank;
mod stats;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use distribution::{
    histogram, kde, kde_grid, kde_integral, leaning_distribution, silverman_bandwidth,
    DistributionSummary, Kde, HISTOGRAM_BINS, KDE_POINTS, MIN_BANDWIDTH,
};
pub use external::{
    load_external_scores, ordinal_rank, validate_against, CorrelationKind, CorrelationReport,
    ExternalScoreFile, ScoreKind,
};
pub use rank::{
    country_profile, language_shares, media_profile, reach_heatmap, top_domains, DomainRank,
    Heatmap, MediaRow, RidgeRow,
};
pub use stats::{average_ranks, correlation_p_value, pearson, spearman, Correlation};

use crate::error::{Error, Result};
use crate::leaning::DualPrediction;
use crate::media::MediaStats;

/// Bins per axis of the bridging-user density grid.
pub const DUAL_GRID_BINS: usize = 20;

/// Joint distribution of bridging users' scores in two countries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSummary {
    pub country_a: String,
    pub country_b: String,
    pub n_pairs: usize,
    pub dropped: usize,
    pub correlation: Option<Correlation>,
    /// `counts[i][j]`: users whose first score falls in bin i and second in
    /// bin j, with `DUAL_GRID_BINS` equal bins over [-1, 1] per axis.
    pub counts: Vec<Vec<u64>>,
    pub pairs: Vec<(String, f64, f64)>,
}

pub fn dual_summary(country_a: &str, country_b: &str, pred: &DualPrediction) -> DualSummary {
    let bin = |s: f64| (((s + 1.0) * DUAL_GRID_BINS as f64 / 2.0).floor() as usize).min(DUAL_GRID_BINS - 1);
    let mut counts = vec![vec![0u64; DUAL_GRID_BINS]; DUAL_GRID_BINS];
    for (a, b) in pred.pairs.values() {
        counts[bin(*a)][bin(*b)] += 1;
    }
    let xs: Vec<f64> = pred.pairs.values().map(|p| p.0).collect();
    let ys: Vec<f64> = pred.pairs.values().map(|p| p.1).collect();
    DualSummary {
        country_a: country_a.to_owned(),
        country_b: country_b.to_owned(),
        n_pairs: pred.pairs.len(),
        dropped: pred.dropped,
        correlation: pearson(&xs, &ys).ok(),
        counts,
        pairs: pred.pairs.iter().map(|(u, (a, b))| (u.clone(), *a, *b)).collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    /// Records in the input archive(s), before keyword filtering.
    pub raw_records: usize,
    pub skipped_lines: usize,
    /// Records matching no sub-stream.
    pub unmatched_records: usize,
    pub duplicates_removed: usize,
    /// Records in the deduplicated corpus.
    pub records: usize,
    pub quote_tweets: usize,
    pub simple_retweets: usize,
    pub stream_counts: BTreeMap<u32, usize>,
    /// Estimated sampling rate per stream; absent for streams missing from
    /// the rate-limit sidecar.
    pub sampling_rates: BTreeMap<u32, Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeoSummary {
    pub geotagged: usize,
    pub geoparsed: usize,
    pub located: usize,
    pub multi_country_excluded: usize,
    pub gazetteer_rows_skipped: usize,
    /// Geoparse agreement with geotags on users that have both.
    pub geoparse_precision: Option<f64>,
    pub users_per_country: BTreeMap<String, usize>,
}

/// Seeds and retweet network of one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub country: String,
    pub politicians: usize,
    pub with_accounts: usize,
    pub seed_coverage: f64,
    /// Whether seed coverage met the threshold; rejected countries are not
    /// processed further.
    pub accepted: bool,
    pub nodes: usize,
    pub edges: usize,
    pub backbone_nodes: usize,
    pub backbone_edges: usize,
    pub seeds_left: usize,
    pub seeds_right: usize,
}

/// Label spreading outcome for one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadSummary {
    pub country: String,
    pub alpha: f64,
    /// Absent when alpha was fixed by configuration.
    pub cv_accuracy: Option<f64>,
    pub alpha_grid: Vec<(f64, f64)>,
    pub iterations: usize,
    pub residual: f64,
    pub scored_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageShares {
    pub country: String,
    pub shares: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingComparison {
    pub country: String,
    pub hashtag_seeds_left: usize,
    pub hashtag_seeds_right: usize,
    pub common_users: usize,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaSummary {
    #[serde(flatten)]
    pub stats: MediaStats,
    pub resolution_rate: f64,
    pub domains: usize,
    pub sharers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryRanking {
    pub country: String,
    pub domains: Vec<DomainRank>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryProfile {
    pub country: String,
    pub rows: Vec<RidgeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediaProfile {
    pub domain: String,
    pub rows: Vec<MediaRow>,
}

/// Everything one run reports. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub format_version: u32,
    pub countries: Vec<String>,
    pub corpus: CorpusSummary,
    pub geolocation: GeoSummary,
    pub networks: Vec<NetworkSummary>,
    pub spreading: Vec<SpreadSummary>,
    pub distributions: Vec<DistributionSummary>,
    pub languages: Vec<LanguageShares>,
    pub seeding_comparison: Option<SeedingComparison>,
    pub bridges: Vec<DualSummary>,
    pub media: MediaSummary,
    pub top_domains: Vec<DomainRank>,
    pub top_domains_by_country: Vec<CountryRanking>,
    pub country_profiles: Vec<CountryProfile>,
    pub media_profiles: Vec<MediaProfile>,
    pub heatmap: Heatmap,
    pub validations: Vec<CorrelationReport>,
    pub validations_skipped: Vec<SkippedValidation>,
}

/// An external source that could not be compared, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedValidation {
    pub source_name: String,
    pub reason: String,
}

pub const REPORT_FORMAT_VERSION: u32 = 1;

impl ReportBundle {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::json("report", e))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json` and the flat CSV exports into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        self.write_distributions_csv(&dir.join("distributions.csv"))?;
        self.write_top_domains_csv(&dir.join("top_domains.csv"))?;
        self.write_validations_csv(&dir.join("validations.csv"))?;
        self.write_heatmap_csv(&dir.join("heatmap.csv"))?;
        Ok(())
    }

    fn write_distributions_csv(&self, path: &Path) -> Result<()> {
        write_rows(
            path,
            &["country", "n_users", "frac_left", "frac_right", "frac_unclassified"],
            self.distributions.iter().map(|d| {
                vec![
                    d.country.clone(),
                    d.n_users.to_string(),
                    d.frac_left.to_string(),
                    d.frac_right.to_string(),
                    d.frac_unclassified.to_string(),
                ]
            }),
        )
    }

    fn write_top_domains_csv(&self, path: &Path) -> Result<()> {
        let global = self
            .top_domains
            .iter()
            .map(|r| vec!["ALL".to_string(), r.domain.clone(), r.reach.to_string()]);
        let per_country = self.top_domains_by_country.iter().flat_map(|c| {
            c.domains
                .iter()
                .map(|r| vec![c.country.clone(), r.domain.clone(), r.reach.to_string()])
        });
        write_rows(path, &["country", "domain", "reach"], global.chain(per_country))
    }

    fn write_validations_csv(&self, path: &Path) -> Result<()> {
        write_rows(
            path,
            &["source_name", "country", "kind", "n_overlap", "coverage", "coefficient", "p_value"],
            self.validations.iter().map(|v| {
                let kind = match v.kind {
                    CorrelationKind::Pearson => "pearson",
                    CorrelationKind::Spearman => "spearman",
                };
                vec![
                    v.source_name.clone(),
                    v.country.clone(),
                    kind.to_string(),
                    v.n_overlap.to_string(),
                    v.coverage.to_string(),
                    v.coefficient.to_string(),
                    v.p_value.to_string(),
                ]
            }),
        )
    }

    fn write_heatmap_csv(&self, path: &Path) -> Result<()> {
        let mut header = vec!["domain"];
        header.extend(self.heatmap.countries.iter().map(String::as_str));
        write_rows(
            path,
            &header,
            self.heatmap.domains.iter().zip(&self.heatmap.values).map(|(d, row)| {
                std::iter::once(d.clone())
                    .chain(row.iter().map(f64::to_string))
                    .collect()
            }),
        )
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_grid_counts() {
        let mut pred = DualPrediction::default();
        pred.pairs.insert("a".into(), (-1.0, -0.95));
        pred.pairs.insert("b".into(), (1.0, 0.99));
        pred.pairs.insert("c".into(), (0.0, 0.2));
        pred.dropped = 2;
        let s = dual_summary("US", "GB", &pred);
        assert_eq!(s.counts[0][0], 1);
        assert_eq!(s.counts[19][19], 1);
        assert_eq!(s.counts[10][12], 1);
        assert_eq!(s.n_pairs, 3);
        assert!(s.correlation.is_some());
    }
}
