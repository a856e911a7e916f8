use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Domains shared per user (D_u). Users with no domain are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserDomains {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl UserDomains {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: &str, domain: &str) {
        self.map
            .entry(user.to_owned())
            .or_default()
            .insert(domain.to_owned());
    }

    pub fn merge(&mut self, other: UserDomains) {
        for (user, domains) in other.map {
            self.map.entry(user).or_default().extend(domains);
        }
    }

    pub fn get(&self, user: &str) -> Option<&BTreeSet<String>> {
        self.map.get(user)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Sharers of one domain within one country.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryAudience {
    pub reach: usize,
    pub mean_leaning: f64,
    /// One score per sharer, ordered by user id.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainProfile {
    pub domain: String,
    pub reach: usize,
    pub mean_leaning: f64,
    pub countries: BTreeMap<String, CountryAudience>,
}

/// Arithmetic mean, clamped to the sample range so rounding can never push
/// it outside `[min, max]`.
pub fn mean_score(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Some(mean.clamp(lo, hi))
}

fn audience(scores: Vec<f64>) -> CountryAudience {
    CountryAudience {
        reach: scores.len(),
        mean_leaning: mean_score(&scores).unwrap_or(0.0),
        scores,
    }
}

/// Per-domain audience profiles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Profiles {
    domains: BTreeMap<String, DomainProfile>,
}

/// Raw score lists: domain → country → sharer scores.
pub type ScoreLists = BTreeMap<String, BTreeMap<String, Vec<f64>>>;

impl Profiles {
    /// Builds profiles from shared domains and `user → (country, score)`.
    /// Users without a score are ignored.
    pub fn build(user_domains: &UserDomains, scores: &BTreeMap<String, (String, f64)>) -> Self {
        let mut lists: ScoreLists = BTreeMap::new();
        for (user, domains) in user_domains.iter() {
            let Some((country, score)) = scores.get(user) else {
                continue;
            };
            for d in domains {
                lists
                    .entry(d.clone())
                    .or_default()
                    .entry(country.clone())
                    .or_default()
                    .push(*score);
            }
        }
        Self::from_score_lists(lists)
    }

    pub fn from_score_lists(lists: ScoreLists) -> Self {
        let domains = lists
            .into_iter()
            .filter(|(_, by_country)| by_country.values().any(|s| !s.is_empty()))
            .map(|(domain, by_country)| {
                let all: Vec<f64> = by_country.values().flatten().copied().collect();
                let countries: BTreeMap<String, CountryAudience> = by_country
                    .into_iter()
                    .filter(|(_, s)| !s.is_empty())
                    .map(|(c, s)| (c, audience(s)))
                    .collect();
                let profile = DomainProfile {
                    domain: domain.clone(),
                    reach: all.len(),
                    mean_leaning: mean_score(&all).unwrap_or(0.0),
                    countries,
                };
                (domain, profile)
            })
            .collect();
        Self { domains }
    }

    pub fn score_lists(&self) -> ScoreLists {
        self.domains
            .iter()
            .map(|(d, p)| {
                let by_country = p
                    .countries
                    .iter()
                    .map(|(c, a)| (c.clone(), a.scores.clone()))
                    .collect();
                (d.clone(), by_country)
            })
            .collect()
    }

    pub fn get(&self, domain: &str) -> Option<&DomainProfile> {
        self.domains.get(domain)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DomainProfile> {
        self.domains.values()
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// Writes `domain,country,reach,mean_leaning`. Rows with country `ALL`
    /// carry the global values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["domain", "country", "reach", "mean_leaning"])
            .map_err(|e| Error::csv(path, e))?;
        for p in self.domains.values() {
            let global = std::iter::once(("ALL", p.reach, p.mean_leaning));
            let per_country = p.countries.iter().map(|(c, a)| (c.as_str(), a.reach, a.mean_leaning));
            for (c, reach, mean) in global.chain(per_country) {
                w.write_record([p.domain.as_str(), c, &reach.to_string(), &mean.to_string()])
                    .map_err(|e| Error::csv(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_score_lists(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, &self.score_lists()).map_err(|e| Error::json(path, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_score_lists(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let lists: ScoreLists =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))?;
        Ok(Self::from_score_lists(lists))
    }
}

/// κ(d) or, with a country, κ(d, l). Unknown domains have reach 0.
pub fn audience_reach(profiles: &Profiles, domain: &str, country: Option<&str>) -> usize {
    let Some(p) = profiles.get(domain) else {
        return 0;
    };
    match country {
        None => p.reach,
        Some(c) => p.countries.get(c).map_or(0, |a| a.reach),
    }
}

/// p̄(d) or p̄(d, l), absent when the reach is below `min_reach`.
pub fn average_audience_leaning(
    profiles: &Profiles,
    domain: &str,
    country: Option<&str>,
    min_reach: usize,
) -> Option<f64> {
    let p = profiles.get(domain)?;
    let (reach, mean) = match country {
        None => (p.reach, p.mean_leaning),
        Some(c) => {
            let a = p.countries.get(c)?;
            (a.reach, a.mean_leaning)
        }
    };
    (reach > 0 && reach >= min_reach).then_some(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(entries: &[(&str, &str, f64)]) -> BTreeMap<String, (String, f64)> {
        entries
            .iter()
            .map(|(u, c, s)| (u.to_string(), (c.to_string(), *s)))
            .collect()
    }

    #[test]
    fn reach_is_set_based() {
        let mut ud = UserDomains::new();
        for _ in 0..5 {
            ud.insert("a", "cnn.com");
        }
        ud.insert("b", "cnn.com");
        ud.insert("c", "cnn.com");
        let p = Profiles::build(&ud, &scored(&[("a", "US", 0.1), ("b", "US", 0.2), ("c", "US", 0.3)]));
        assert_eq!(audience_reach(&p, "cnn.com", None), 3);
        assert_eq!(audience_reach(&p, "fox.com", None), 0);
    }

    #[test]
    fn partition_over_countries() {
        let mut ud = UserDomains::new();
        for u in ["a", "b", "c", "d", "e"] {
            ud.insert(u, "bbc.com");
        }
        let s = scored(&[("a", "US", 0.0), ("b", "US", 0.0), ("c", "GB", 0.0), ("d", "GB", 0.0), ("e", "GB", 0.0)]);
        let p = Profiles::build(&ud, &s);
        assert_eq!(audience_reach(&p, "bbc.com", None), 5);
        assert_eq!(audience_reach(&p, "bbc.com", Some("US")), 2);
        assert_eq!(audience_reach(&p, "bbc.com", Some("GB")), 3);
    }

    #[test]
    fn means() {
        let mut ud = UserDomains::new();
        ud.insert("a", "x.com");
        ud.insert("b", "x.com");
        ud.insert("c", "y.com");
        ud.insert("d", "y.com");
        ud.insert("e", "y.com");
        let s = scored(&[("a", "US", -1.0), ("b", "US", 1.0), ("c", "US", -1.0), ("d", "US", 0.5), ("e", "US", 0.5)]);
        let p = Profiles::build(&ud, &s);
        assert_eq!(average_audience_leaning(&p, "x.com", None, 1), Some(0.0));
        assert_eq!(average_audience_leaning(&p, "y.com", Some("US"), 1), Some(0.0));
        assert_eq!(average_audience_leaning(&p, "y.com", Some("US"), 50), None);
        assert_eq!(average_audience_leaning(&p, "y.com", Some("GB"), 1), None);
    }

    #[test]
    fn unscored_sharers_ignored() {
        let mut ud = UserDomains::new();
        ud.insert("a", "x.com");
        ud.insert("ghost", "x.com");
        let p = Profiles::build(&ud, &scored(&[("a", "US", 0.4)]));
        assert_eq!(audience_reach(&p, "x.com", None), 1);
    }

    #[test]
    fn mean_clamped_to_range() {
        let s = [0.1; 10];
        let m = mean_score(&s).unwrap();
        assert_eq!(m, 0.1);
        assert!(mean_score(&[]).is_none());
    }

    #[test]
    fn score_lists_round_trip() {
        let mut ud = UserDomains::new();
        ud.insert("a", "x.com");
        ud.insert("b", "x.com");
        ud.insert("b", "y.co.uk");
        let s = scored(&[("a", "US", 0.1 + 0.2), ("b", "GB", -1.0 / 3.0)]);
        let p = Profiles::build(&ud, &s);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lists.json");
        p.write_score_lists(&path).unwrap();
        assert_eq!(Profiles::read_score_lists(&path).unwrap(), p);
        p.write_csv(&dir.path().join("profiles.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("profiles.csv")).unwrap();
        assert!(text.starts_with("domain,country,reach,mean_leaning\n"));
        assert!(text.contains("x.com,ALL,2,"));
    }
}
