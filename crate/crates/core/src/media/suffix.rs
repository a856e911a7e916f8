//! Registrable-domain extraction with public-suffix rules.
//!
//! Rules use the public suffix list text format: one rule per line, `//`
//! comments, `*.` wildcard rules and `!` exception rules. The registrable
//! domain of a host is its public suffix plus one more label.

use std::collections::HashSet;
use std::path::Path;

use url::{Host, Url};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct SuffixRules {
    normal: HashSet<String>,
    /// Stored without the leading `*.`.
    wildcard: HashSet<String>,
    /// Stored without the leading `!`.
    exception: HashSet<String>,
}

fn to_ascii(rule: &str) -> Option<String> {
    if rule.is_ascii() {
        Some(rule.to_ascii_lowercase())
    } else {
        idna::domain_to_ascii(rule).ok()
    }
}

impl SuffixRules {
    pub fn parse(text: &str) -> Self {
        let mut rules = SuffixRules::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let Some(rule) = line.split_whitespace().next() else {
                continue;
            };
            if let Some(rest) = rule.strip_prefix('!') {
                if let Some(r) = to_ascii(rest) {
                    rules.exception.insert(r);
                }
            } else if let Some(rest) = rule.strip_prefix("*.") {
                if let Some(r) = to_ascii(rest) {
                    rules.wildcard.insert(r);
                }
            } else if let Some(r) = to_ascii(rule) {
                rules.normal.insert(r);
            }
        }
        rules
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn len(&self) -> usize {
        self.normal.len() + self.wildcard.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of trailing labels of `labels` forming the public suffix.
    fn suffix_len(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        for i in 0..n {
            if self.exception.contains(&labels[i..].join(".")) {
                return n - i - 1;
            }
        }
        for i in 0..n {
            let candidate = labels[i..].join(".");
            if self.normal.contains(&candidate) {
                return n - i;
            }
            if i + 1 < n && self.wildcard.contains(&labels[i + 1..].join(".")) {
                return n - i;
            }
        }
        // Implicit "*" rule.
        1
    }

    /// Public suffix and registrable domain of a lowercase ASCII host name.
    pub fn split_host<'a>(&self, host: &'a str) -> Option<(&'a str, &'a str)> {
        let host = host.trim_end_matches('.');
        if host.is_empty() {
            return None;
        }
        let labels: Vec<&str> = host.split('.').collect();
        if labels.iter().any(|l| l.is_empty()) {
            return None;
        }
        let suffix_len = self.suffix_len(&labels);
        if labels.len() <= suffix_len {
            return None;
        }
        let offset = |k: usize| -> usize {
            // Byte offset where the last k labels start.
            let skip = labels.len() - k;
            labels[..skip].iter().map(|l| l.len() + 1).sum()
        };
        Some((&host[offset(suffix_len)..], &host[offset(suffix_len + 1)..]))
    }

    /// Registrable domain of a host name.
    pub fn registrable_domain(&self, host: &str) -> Option<String> {
        let host = host.to_ascii_lowercase();
        self.split_host(&host).map(|(_, d)| d.to_owned())
    }
}

/// Parses `raw` as a URL, retrying with an `http://` prefix when it has no
/// scheme.
pub fn parse_url(raw: &str) -> Result<Url> {
    let raw = raw.trim();
    match Url::parse(raw) {
        Ok(u) if u.has_host() => Ok(u),
        _ => Url::parse(&format!("http://{raw}")).map_err(|e| Error::Url {
            url: raw.to_owned(),
            reason: e.to_string(),
        }),
    }
}

/// Lowercase host of a URL, if it has a domain host.
pub fn url_host(raw: &str) -> Result<String> {
    let url = parse_url(raw)?;
    match url.host() {
        Some(Host::Domain(d)) => Ok(d.trim_end_matches('.').to_ascii_lowercase()),
        Some(_) => Err(Error::Url {
            url: raw.to_owned(),
            reason: "IP address host".into(),
        }),
        None => Err(Error::Url {
            url: raw.to_owned(),
            reason: "no host".into(),
        }),
    }
}

/// Registrable domain of the URL's host.
pub fn extract_domain(raw: &str, rules: &SuffixRules) -> Result<String> {
    let host = url_host(raw)?;
    rules.registrable_domain(&host).ok_or_else(|| Error::Url {
        url: raw.to_owned(),
        reason: format!("{host} has no registrable domain"),
    })
}
