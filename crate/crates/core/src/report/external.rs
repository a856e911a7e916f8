use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{pearson, spearman};
use crate::error::{Error, Result};
use crate::media::{average_audience_leaning, extract_domain, Profiles, SuffixRules};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Numeric,
    Ordinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

/// Bias scores for domains from one outside source.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScoreFile {
    pub source_name: String,
    pub kind: ScoreKind,
    pub entries: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct Row {
    domain: String,
    score: String,
    kind: ScoreKind,
    source_name: String,
}

/// Rank of an ordinal label, left to right: L, CL, C, CR, R, ER → 1..6.
/// Plain integer ranks are accepted as well.
pub fn ordinal_rank(label: &str) -> Option<f64> {
    let rank = match label.trim().to_ascii_uppercase().as_str() {
        "L" => 1,
        "CL" => 2,
        "C" => 3,
        "CR" => 4,
        "R" => 5,
        "ER" => 6,
        other => return other.parse::<u32>().ok().map(f64::from),
    };
    Some(f64::from(rank))
}

/// Loads a CSV `domain,score,kind,source_name`, one group per source.
/// Domains are canonicalized to registrable domains; sources come back in
/// name order.
pub fn load_external_scores(path: &Path, rules: &SuffixRules) -> Result<Vec<ExternalScoreFile>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut sources: BTreeMap<String, ExternalScoreFile> = BTreeMap::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let bad = |msg: String| Error::InvalidInput(format!("{}: row {}: {msg}", path.display(), line + 2));
        let raw = row.domain.trim();
        let domain = if raw.contains("://") {
            extract_domain(raw, rules)
        } else {
            extract_domain(&format!("https://{raw}"), rules)
        }
        .map_err(|e| bad(e.to_string()))?;
        let score = match row.kind {
            ScoreKind::Numeric => {
                let v: f64 = row.score.trim().parse().map_err(|_| bad(format!("bad score {:?}", row.score)))?;
                if !(-1.0..=1.0).contains(&v) {
                    return Err(bad(format!("numeric score {v} outside [-1, 1]")));
                }
                v
            }
            ScoreKind::Ordinal => {
                ordinal_rank(&row.score).ok_or_else(|| bad(format!("bad ordinal label {:?}", row.score)))?
            }
        };
        let src = sources
            .entry(row.source_name.clone())
            .or_insert_with(|| ExternalScoreFile {
                source_name: row.source_name.clone(),
                kind: row.kind,
                entries: BTreeMap::new(),
            });
        if src.kind != row.kind {
            return Err(bad(format!("source {} mixes numeric and ordinal scores", row.source_name)));
        }
        if let Some(prev) = src.entries.insert(domain.clone(), score) {
            if prev != score {
                return Err(bad(format!("conflicting scores for {domain}")));
            }
        }
    }
    Ok(sources.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub source_name: String,
    pub country: String,
    pub kind: CorrelationKind,
    pub n_overlap: usize,
    /// Matched domains over the external list's size.
    pub coverage: f64,
    pub coefficient: f64,
    pub p_value: f64,
    /// `(domain, our mean leaning, external score)` per matched domain.
    pub points: Vec<(String, f64, f64)>,
}

/// Correlates p̄(d, country) with an external source over domains that
/// reach at least `min_reach` users in the country.
pub fn validate_against(
    profiles: &Profiles,
    ext: &ExternalScoreFile,
    country: &str,
    min_reach: usize,
) -> Result<CorrelationReport> {
    let points: Vec<(String, f64, f64)> = ext
        .entries
        .iter()
        .filter_map(|(d, theirs)| {
            average_audience_leaning(profiles, d, Some(country), min_reach).map(|ours| (d.clone(), ours, *theirs))
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "{} overlaps on {} domains in {country}; need at least 3",
            ext.source_name,
            points.len()
        )));
    }
    let ours: Vec<f64> = points.iter().map(|p| p.1).collect();
    let theirs: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (kind, corr) = match ext.kind {
        ScoreKind::Numeric => (CorrelationKind::Pearson, pearson(&ours, &theirs)?),
        ScoreKind::Ordinal => (CorrelationKind::Spearman, spearman(&ours, &theirs)?),
    };
    Ok(CorrelationReport {
        source_name: ext.source_name.clone(),
        country: country.to_owned(),
        kind,
        n_overlap: points.len(),
        coverage: points.len() as f64 / ext.entries.len() as f64,
        coefficient: corr.coefficient,
        p_value: corr.p_value,
        points,
    })
}
