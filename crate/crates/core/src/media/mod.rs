//! Shared URLs, shortener resolution, registrable domains and audience
//! profiles.

mod profile;
mod shortener;
mod suffix;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use profile::{
    audience_reach, average_audience_leaning, mean_score, CountryAudience, DomainProfile,
    Profiles, ScoreLists, UserDomains,
};
pub use shortener::{resolve_url, Resolution, ShortenerKind, ShortenerMap};
pub use suffix::{extract_domain, parse_url, url_host, SuffixRules};

use crate::corpus::TweetRecord;

/// `(user, url)` for every URL occurrence in tweets posted by scored users.
pub fn extract_user_urls<'a, I>(corpus: I, scored_users: &BTreeSet<String>) -> Vec<(String, String)>
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    corpus
        .into_iter()
        .filter(|t| scored_users.contains(&t.user_id))
        .flat_map(|t| t.urls.iter().map(|u| (t.user_id.clone(), u.clone())))
        .collect()
}

/// Counters from mapping URL occurrences to domains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaStats {
    pub pairs: usize,
    pub direct: usize,
    pub platform: usize,
    /// General-shortener links resolved to a full URL.
    pub expanded: usize,
    pub unresolved: usize,
    pub unparseable: usize,
}

impl MediaStats {
    pub fn merge(&mut self, other: MediaStats) {
        self.pairs += other.pairs;
        self.direct += other.direct;
        self.platform += other.platform;
        self.expanded += other.expanded;
        self.unresolved += other.unresolved;
        self.unparseable += other.unparseable;
    }

    /// Share of general-shortener links that were resolved; 1 when there
    /// were none.
    pub fn resolution_rate(&self) -> f64 {
        let total = self.expanded + self.unresolved;
        if total == 0 {
            1.0
        } else {
            self.expanded as f64 / total as f64
        }
    }
}

/// Resolves and maps `(user, url)` pairs to each user's domain set.
/// Unresolvable and unparseable URLs are counted and dropped.
pub fn map_user_domains(
    pairs: &[(String, String)],
    shorteners: &ShortenerMap,
    rules: &SuffixRules,
    allow_network: bool,
) -> (UserDomains, MediaStats) {
    let mut out = UserDomains::new();
    let mut stats = MediaStats {
        pairs: pairs.len(),
        ..MediaStats::default()
    };
    for (user, url) in pairs {
        let via_shortener = url_host(url).is_ok_and(|h| shorteners.is_general(&h));
        let domain = match resolve_url(url, shorteners, allow_network) {
            Resolution::PlatformDomain(d) => {
                stats.platform += 1;
                Some(d)
            }
            Resolution::FullUrl(full) => match extract_domain(&full, rules) {
                Ok(d) => {
                    if via_shortener {
                        stats.expanded += 1;
                    } else {
                        stats.direct += 1;
                    }
                    Some(d)
                }
                Err(e) => {
                    log::debug!("dropping {url}: {e}");
                    stats.unparseable += 1;
                    None
                }
            },
            Resolution::Unresolved(reason) => {
                log::debug!("unresolved {url}: {reason}");
                stats.unresolved += 1;
                None
            }
        };
        if let Some(d) = domain {
            out.insert(user, &d);
        }
    }
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(user: &str, urls: &[&str]) -> TweetRecord {
        TweetRecord {
            tweet_id: format!("{user}-{}", urls.len()),
            user_id: user.into(),
            timestamp: 0,
            lang: "en".into(),
            text: String::new(),
            hashtags: vec![],
            urls: urls.iter().map(|u| u.to_string()).collect(),
            place_country: None,
            retweeted_user_id: None,
            is_quote: false,
            profile_location: None,
        }
    }

    #[test]
    fn urls_restricted_to_scored_users() {
        let corpus = [tweet("a", &["https://x.com/1", "https://y.com/2"]), tweet("b", &["https://z.com"])];
        let scored: BTreeSet<String> = ["a".to_string()].into();
        let pairs = extract_user_urls(&corpus, &scored);
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().all(|(u, _)| u == "a"));
    }

    #[test]
    fn mapping_counts_each_outcome() {
        let rules = SuffixRules::parse("com\nuk\nco.uk\n");
        let mut sh = ShortenerMap::new(
            [("wapo.st".to_string(), "washingtonpost.com".to_string())],
            ["bit.ly".to_string()],
        )
        .unwrap();
        sh.insert_cached("https://bit.ly/a", "https://www.bbc.co.uk/news");
        let pairs: Vec<(String, String)> = [
            "https://www.cnn.com/x",
            "https://wapo.st/q",
            "https://bit.ly/a",
            "https://bit.ly/b",
            "http://10.0.0.1/",
        ]
        .iter()
        .map(|u| ("u".to_string(), u.to_string()))
        .collect();
        let (ud, stats) = map_user_domains(&pairs, &sh, &rules, false);
        let expected: BTreeSet<String> = ["cnn.com", "washingtonpost.com", "bbc.co.uk"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ud.get("u"), Some(&expected));
        assert_eq!(
            stats,
            MediaStats { pairs: 5, direct: 1, platform: 1, expanded: 1, unresolved: 1, unparseable: 1 }
        );
        assert_eq!(stats.resolution_rate(), 0.5);
    }
}
