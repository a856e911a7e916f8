use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::suffix::{parse_url, url_host};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShortenerKind {
    Platform,
    General,
}

#[derive(Debug, Clone, Deserialize)]
struct ShortenerRow {
    host: String,
    kind: ShortenerKind,
    #[serde(default)]
    target_domain: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct CacheRow {
    short_url: String,
    full_url: String,
}

/// Known URL shorteners plus previously resolved short links.
#[derive(Debug, Clone, Default)]
pub struct ShortenerMap {
    platform: BTreeMap<String, String>,
    general: BTreeSet<String>,
    cache: BTreeMap<String, String>,
}

fn canonical_host(host: &str) -> String {
    let h = host.trim().trim_end_matches('.').to_ascii_lowercase();
    h.strip_prefix("www.").map(str::to_owned).unwrap_or(h)
}

/// Cache key for a URL: the parsed and re-serialized form when parseable.
fn cache_key(raw: &str) -> String {
    parse_url(raw)
        .map(|u| u.to_string())
        .unwrap_or_else(|_| raw.trim().to_owned())
}

impl ShortenerMap {
    pub fn new<P, G>(platform: P, general: G) -> Result<Self>
    where
        P: IntoIterator<Item = (String, String)>,
        G: IntoIterator<Item = String>,
    {
        let platform: BTreeMap<String, String> = platform
            .into_iter()
            .map(|(h, d)| (canonical_host(&h), d.trim().to_ascii_lowercase()))
            .collect();
        let general: BTreeSet<String> = general.into_iter().map(|h| canonical_host(&h)).collect();
        if let Some(h) = platform.keys().find(|h| general.contains(*h)) {
            return Err(Error::InvalidInput(format!(
                "shortener host {h} listed as both platform and general"
            )));
        }
        Ok(Self {
            platform,
            general,
            cache: BTreeMap::new(),
        })
    }

    /// Loads the shortener CSV (`host,kind,target_domain`) and, optionally,
    /// the resolved cache CSV (`short_url,full_url`).
    pub fn load(shorteners: &Path, cache: Option<&Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(shorteners).map_err(|e| Error::csv(shorteners, e))?;
        let mut platform = Vec::new();
        let mut general = Vec::new();
        for row in rdr.deserialize::<ShortenerRow>() {
            let row = row.map_err(|e| Error::csv(shorteners, e))?;
            match (row.kind, row.target_domain.filter(|d| !d.trim().is_empty())) {
                (ShortenerKind::Platform, Some(d)) => platform.push((row.host, d)),
                (ShortenerKind::Platform, None) => {
                    return Err(Error::InvalidInput(format!(
                        "platform shortener {} has no target domain",
                        row.host
                    )))
                }
                (ShortenerKind::General, _) => general.push(row.host),
            }
        }
        let mut map = Self::new(platform, general)?;
        if let Some(path) = cache {
            let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
            for row in rdr.deserialize::<CacheRow>() {
                let row = row.map_err(|e| Error::csv(path, e))?;
                map.insert_cached(&row.short_url, &row.full_url);
            }
        }
        Ok(map)
    }

    pub fn insert_cached(&mut self, short_url: &str, full_url: &str) {
        self.cache.insert(cache_key(short_url), full_url.trim().to_owned());
    }

    pub fn platform_target(&self, host: &str) -> Option<&str> {
        self.platform.get(&canonical_host(host)).map(String::as_str)
    }

    pub fn is_general(&self, host: &str) -> bool {
        self.general.contains(&canonical_host(host))
    }

    pub fn cached(&self, short_url: &str) -> Option<&str> {
        self.cache.get(&cache_key(short_url)).map(String::as_str)
    }

    pub fn platform_len(&self) -> usize {
        self.platform.len()
    }

    pub fn general_len(&self) -> usize {
        self.general.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// A URL whose domain can be extracted directly.
    FullUrl(String),
    /// A platform shortener's publisher domain.
    PlatformDomain(String),
    Unresolved(String),
}

/// Maps a shared URL to something domain extraction can use.
pub fn resolve_url(url: &str, map: &ShortenerMap, allow_network: bool) -> Resolution {
    let host = match url_host(url) {
        Ok(h) => h,
        // Let domain extraction report unparseable URLs.
        Err(_) => return Resolution::FullUrl(url.to_owned()),
    };
    if let Some(domain) = map.platform_target(&host) {
        return Resolution::PlatformDomain(domain.to_owned());
    }
    if !map.is_general(&host) {
        return Resolution::FullUrl(url.to_owned());
    }
    if let Some(full) = map.cached(url) {
        return Resolution::FullUrl(full.to_owned());
    }
    if !allow_network {
        return Resolution::Unresolved("not in resolved cache and network disabled".into());
    }
    match live::follow_redirects(url) {
        Ok(full) => Resolution::FullUrl(full),
        Err(reason) => Resolution::Unresolved(reason),
    }
}

#[cfg(feature = "live-resolve")]
mod live {
    use std::time::Duration;

    use ureq::ResponseExt;

    const MAX_HOPS: u32 = 10;

    pub fn follow_redirects(url: &str) -> Result<String, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .max_redirects(MAX_HOPS)
            .timeout_global(Some(Duration::from_secs(10)))
            .http_status_as_error(false)
            .build()
            .into();
        let resp = agent.head(url).call().map_err(|e| e.to_string())?;
        Ok(resp.get_uri().to_string())
    }
}

#[cfg(not(feature = "live-resolve"))]
mod live {
    pub fn follow_redirects(_url: &str) -> Result<String, String> {
        Err("built without the live-resolve feature".into())
    }
}
