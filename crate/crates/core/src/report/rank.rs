use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};
use crate::media::{audience_reach, Profiles};

/// Language buckets of tweets posted by users located in `country`, most
/// frequent first with ties alphabetical. Missing language tags count as
/// "und".
pub fn language_shares<'a, I>(
    corpus: I,
    geo: &BTreeMap<String, String>,
    country: &str,
    top_k: usize,
) -> Vec<(String, f64)>
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for t in corpus {
        if geo.get(&t.user_id).is_some_and(|c| c == country) {
            let lang = if t.lang.trim().is_empty() { "und" } else { t.lang.as_str() };
            *counts.entry(lang).or_default() += 1;
            total += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(top_k)
        .map(|(l, c)| (l.to_owned(), c as f64 / total as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomainRank {
    pub domain: String,
    pub reach: usize,
}

/// Domains by descending reach (global or within one country), ties by
/// name. Domains with no sharers in the country are left out.
pub fn top_domains(profiles: &Profiles, country: Option<&str>, k: usize) -> Vec<DomainRank> {
    let mut ranked: Vec<DomainRank> = profiles
        .iter()
        .map(|p| DomainRank {
            domain: p.domain.clone(),
            reach: audience_reach(profiles, &p.domain, country),
        })
        .filter(|r| r.reach > 0)
        .collect();
    ranked.sort_by(|a, b| b.reach.cmp(&a.reach).then_with(|| a.domain.cmp(&b.domain)));
    ranked.truncate(k);
    ranked
}

/// One ridge: a domain's within-country audience.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeRow {
    pub domain: String,
    pub reach: usize,
    pub mean_leaning: f64,
    pub scores: Vec<f64>,
}

/// The `k` domains with the largest reach in `country` (at least
/// `min_reach`), ordered by ascending mean leaning, ties by name.
pub fn country_profile(profiles: &Profiles, country: &str, k: usize, min_reach: usize) -> Vec<RidgeRow> {
    let mut rows: Vec<RidgeRow> = top_domains(profiles, Some(country), usize::MAX)
        .into_iter()
        .filter(|r| r.reach >= min_reach)
        .take(k)
        .map(|r| {
            let a = &profiles.get(&r.domain).expect("ranked domain exists").countries[country];
            RidgeRow {
                domain: r.domain,
                reach: a.reach,
                mean_leaning: a.mean_leaning,
                scores: a.scores.clone(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_leaning
            .total_cmp(&b.mean_leaning)
            .then_with(|| a.domain.cmp(&b.domain))
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediaRow {
    pub country: String,
    pub reach: usize,
    pub mean_leaning: f64,
    pub scores: Vec<f64>,
}

/// A domain's audience in every country where it has sharers, in
/// `country_order` (countries not listed follow alphabetically).
pub fn media_profile(profiles: &Profiles, domain: &str, country_order: &[String]) -> Result<Vec<MediaRow>> {
    let p = profiles
        .get(domain)
        .ok_or_else(|| Error::UnknownDomain(domain.to_owned()))?;
    let listed: BTreeSet<&str> = country_order.iter().map(String::as_str).collect();
    let order = country_order
        .iter()
        .map(String::as_str)
        .chain(p.countries.keys().map(String::as_str).filter(|c| !listed.contains(c)));
    Ok(order
        .filter_map(|c| {
            p.countries.get(c).map(|a| MediaRow {
                country: c.to_owned(),
                reach: a.reach,
                mean_leaning: a.mean_leaning,
                scores: a.scores.clone(),
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub domains: Vec<String>,
    pub countries: Vec<String>,
    /// `values[i][j]`: share of scored users in `countries[j]` who shared
    /// `domains[i]`.
    pub values: Vec<Vec<f64>>,
}

pub fn reach_heatmap(
    profiles: &Profiles,
    domains: &[String],
    countries: &[String],
    scored_users: &BTreeMap<String, usize>,
) -> Heatmap {
    let values = domains
        .iter()
        .map(|d| {
            countries
                .iter()
                .map(|c| match scored_users.get(c) {
                    Some(&n) if n > 0 => {
                        (audience_reach(profiles, d, Some(c)) as f64 / n as f64).min(1.0)
                    }
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    Heatmap {
        domains: domains.to_vec(),
        countries: countries.to_vec(),
        values,
    }
}
