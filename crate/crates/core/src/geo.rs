//! User geolocation from tweet geotags and profile location strings.
//!
//! Profile strings are matched exactly (after canonicalization) against a
//! gazetteer of city/state/country combinations. A string is accepted only
//! when it names exactly one country; ambiguous and unknown strings are
//! rejected rather than guessed. When both sources resolve a user, the
//! geotag wins.
//!
//! State-only and country-only strings ("texas", "canada", "ca") are part of
//! the generated key grammar, so they resolve when unambiguous.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};

/// Canonical form used for gazetteer keys and lookups: NFC, lowercase,
/// comma-separated parts trimmed with internal whitespace collapsed, joined
/// by ", ". Empty parts are dropped.
pub fn normalize_location(raw: &str) -> String {
    let nfc: String = raw.nfc().collect::<String>().to_lowercase();
    let parts: Vec<String> = nfc
        .split(',')
        .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|p| !p.is_empty())
        .collect();
    parts.join(", ")
}

/// One row of the city/state/country table.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize, Serialize)]
pub struct GazetteerRow {
    pub city: String,
    pub state_name: String,
    pub state_abbrev: String,
    pub country_name: String,
    pub country_code: String,
}

/// Normalized location string → set of country codes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl Gazetteer {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.entries.iter()
    }

    /// Resolves a raw profile string to a single country, if unambiguous.
    pub fn resolve(&self, raw: &str) -> Option<&str> {
        let key = normalize_location(raw);
        if key.is_empty() {
            return None;
        }
        match self.entries.get(&key) {
            Some(countries) if countries.len() == 1 => countries.iter().next().map(String::as_str),
            _ => None,
        }
    }

    fn add(&mut self, parts: &[&str], country: &str) {
        for sep in [", ", " "] {
            let key = normalize_location(&parts.join(sep));
            if !key.is_empty() {
                self.entries
                    .entry(key)
                    .or_default()
                    .insert(country.to_owned());
            }
        }
    }

    fn add_row(&mut self, row: &GazetteerRow) {
        let code = row.country_code.trim().to_uppercase();
        let city = row.city.trim();
        let states: Vec<&str> = [row.state_name.trim(), row.state_abbrev.trim()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect();
        let countries: Vec<&str> = [row.country_name.trim(), row.country_code.trim()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect();

        fn with_city<'a>(city: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
            let mut v = Vec::with_capacity(rest.len() + 1);
            if !city.is_empty() {
                v.push(city);
            }
            v.extend_from_slice(rest);
            v
        }

        if !city.is_empty() {
            self.add(&[city], &code);
        }
        for &s in &states {
            self.add(&with_city(city, &[s]), &code);
            self.add(&[s], &code);
        }
        for &k in &countries {
            self.add(&with_city(city, &[k]), &code);
            self.add(&[k], &code);
            for &s in &states {
                self.add(&with_city(city, &[s, k]), &code);
                self.add(&[s, k], &code);
            }
        }
    }
}

fn row_is_valid(row: &GazetteerRow) -> bool {
    let code = row.country_code.trim();
    !code.is_empty()
        && code.chars().all(|c| c.is_ascii_alphabetic())
        && !row.country_name.trim().is_empty()
}

/// Builds the gazetteer from in-memory rows, returning it with the number of
/// rows rejected as malformed.
pub fn build_gazetteer<'a, I>(rows: I) -> (Gazetteer, usize)
where
    I: IntoIterator<Item = &'a GazetteerRow>,
{
    let mut g = Gazetteer::default();
    let mut skipped = 0;
    for row in rows {
        if row_is_valid(row) {
            g.add_row(row);
        } else {
            log::warn!("skipping malformed gazetteer row {row:?}");
            skipped += 1;
        }
    }
    (g, skipped)
}

/// Reads a gazetteer CSV (`city,state_name,state_abbrev,country_name,country_code`).
pub fn load_gazetteer(path: &Path) -> Result<(Gazetteer, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    let mut skipped = 0;
    for rec in reader.deserialize::<GazetteerRow>() {
        match rec {
            Ok(row) => rows.push(row),
            Err(e) => {
                if e.is_io_error() {
                    return Err(Error::csv(path, e));
                }
                log::warn!("{}: skipping malformed row: {e}", path.display());
                skipped += 1;
            }
        }
    }
    let (g, invalid) = build_gazetteer(&rows);
    Ok((g, skipped + invalid))
}

pub fn parse_profile_location(raw: &str, g: &Gazetteer) -> Option<String> {
    g.resolve(raw).map(str::to_owned)
}

/// Maps each user whose geotagged tweets all carry the same country to that
/// country. Users geotagged in two or more countries are left out.
pub fn geotag_users(corpus: &[TweetRecord]) -> BTreeMap<String, String> {
    let mut seen: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for t in corpus {
        if let Some(c) = t.place_country.as_deref() {
            let c = c.trim();
            if !c.is_empty() {
                seen.entry(&t.user_id).or_default().insert(c.to_uppercase());
            }
        }
    }
    seen.into_iter()
        .filter(|(_, cs)| cs.len() == 1)
        .map(|(u, cs)| (u.to_owned(), cs.into_iter().next().expect("one country")))
        .collect()
}

/// The most recent non-empty profile location string per user.
pub fn profile_locations(corpus: &[TweetRecord]) -> BTreeMap<String, String> {
    let mut latest: BTreeMap<&str, (i64, &str)> = BTreeMap::new();
    for t in corpus {
        let Some(loc) = t.profile_location.as_deref() else {
            continue;
        };
        if loc.trim().is_empty() {
            continue;
        }
        let slot = latest.entry(&t.user_id).or_insert((t.timestamp, loc));
        if t.timestamp >= slot.0 {
            *slot = (t.timestamp, loc);
        }
    }
    latest
        .into_iter()
        .map(|(u, (_, loc))| (u.to_owned(), loc.to_owned()))
        .collect()
}

/// Geoparses every user's profile string, keeping only unambiguous matches.
pub fn geoparse_users(corpus: &[TweetRecord], g: &Gazetteer) -> BTreeMap<String, String> {
    profile_locations(corpus)
        .into_iter()
        .filter_map(|(u, loc)| parse_profile_location(&loc, g).map(|c| (u, c)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoSource {
    Geotag,
    Profile,
    Merged,
}

impl fmt::Display for GeoSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeoSource::Geotag => "geotag",
            GeoSource::Profile => "profile",
            GeoSource::Merged => "merged",
        })
    }
}

impl FromStr for GeoSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geotag" => Ok(GeoSource::Geotag),
            "profile" => Ok(GeoSource::Profile),
            "merged" => Ok(GeoSource::Merged),
            other => Err(Error::InvalidInput(format!("unknown geo source {other:?}"))),
        }
    }
}

/// A user resolved to exactly one country.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoUser {
    pub user_id: String,
    pub country: String,
    pub source: GeoSource,
}

/// Merges the two sources; users present in both take the geotag country.
pub fn merge_locations(
    geotagged: &BTreeMap<String, String>,
    geoparsed: &BTreeMap<String, String>,
) -> Vec<GeoUser> {
    let users: BTreeSet<&String> = geotagged.keys().chain(geoparsed.keys()).collect();
    users
        .into_iter()
        .map(|u| {
            let (country, source) = match (geotagged.get(u), geoparsed.get(u)) {
                (Some(tag), Some(_)) => (tag, GeoSource::Merged),
                (Some(tag), None) => (tag, GeoSource::Geotag),
                (None, Some(parsed)) => (parsed, GeoSource::Profile),
                (None, None) => unreachable!("user drawn from one of the maps"),
            };
            GeoUser {
                user_id: u.clone(),
                country: country.clone(),
                source,
            }
        })
        .collect()
}

/// Share of users resolved by both sources whose countries agree.
pub fn geoparse_precision(
    geotagged: &BTreeMap<String, String>,
    geoparsed: &BTreeMap<String, String>,
) -> Result<f64> {
    let mut overlap = 0usize;
    let mut agree = 0usize;
    for (u, tag) in geotagged {
        if let Some(parsed) = geoparsed.get(u) {
            overlap += 1;
            if parsed == tag {
                agree += 1;
            }
        }
    }
    if overlap == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(agree as f64 / overlap as f64)
}

/// user_id → country lookup over a merged user set.
pub fn country_index(users: &[GeoUser]) -> BTreeMap<String, String> {
    users
        .iter()
        .map(|u| (u.user_id.clone(), u.country.clone()))
        .collect()
}

pub fn write_geo_users(path: &Path, users: &[GeoUser]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for u in users {
        w.serialize(u).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_geo_users(path: &Path) -> Result<Vec<GeoUser>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<GeoUser>, _>>()
        .map_err(|e| Error::csv(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(city: &str, state: &str, abbrev: &str, country: &str, code: &str) -> GazetteerRow {
        GazetteerRow {
            city: city.into(),
            state_name: state.into(),
            state_abbrev: abbrev.into(),
            country_name: country.into(),
            country_code: code.into(),
        }
    }

    fn canberra() -> GazetteerRow {
        row("Canberra", "Australian Capital Territory", "ACT", "Australia", "AU")
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_location("  Canberra ,ACT "), "canberra, act");
        assert_eq!(normalize_location("New   York,,  NY"), "new york, ny");
        assert_eq!(normalize_location(" , "), "");
        // Decomposed e + combining acute composes to the same key.
        assert_eq!(normalize_location("Montre\u{301}al"), normalize_location("Montréal"));
    }

    #[test]
    fn one_row_builder() {
        let (g, skipped) = build_gazetteer(&[canberra()]);
        assert_eq!(skipped, 0);
        let au: BTreeSet<String> = ["AU".to_string()].into();
        assert_eq!(g.get("canberra, act"), Some(&au));
        assert_eq!(g.get("canberra"), Some(&au));
        assert_eq!(g.get("canberra act"), Some(&au));
        assert_eq!(g.get("canberra, australian capital territory, australia"), Some(&au));
        assert_eq!(g.get("australia"), Some(&au));
        assert_eq!(g.get("act, au"), Some(&au));
    }

    #[test]
    fn colliding_city() {
        let (g, _) = build_gazetteer(&[
            row("Paris", "Ile-de-France", "IDF", "France", "FR"),
            row("Paris", "Texas", "TX", "United States", "US"),
        ]);
        let both: BTreeSet<String> = ["FR".to_string(), "US".to_string()].into();
        assert_eq!(g.get("paris"), Some(&both));
        assert_eq!(parse_profile_location("paris", &g), None);
        assert_eq!(parse_profile_location("Paris, TX", &g).as_deref(), Some("US"));
    }

    #[test]
    fn empty_table() {
        let (g, skipped) = build_gazetteer(&[]);
        assert!(g.is_empty());
        assert_eq!(skipped, 0);
    }

    #[test]
    fn malformed_rows_skipped() {
        let (g, skipped) = build_gazetteer(&[row("X", "", "", "", ""), canberra()]);
        assert_eq!(skipped, 1);
        assert!(g.get("canberra").is_some());
    }

    #[test]
    fn profile_examples() {
        let (g, _) = build_gazetteer(&[canberra()]);
        assert_eq!(parse_profile_location("Canberra, ACT", &g).as_deref(), Some("AU"));
        assert_eq!(parse_profile_location("Mars", &g), None);
        assert_eq!(parse_profile_location("", &g), None);
    }

    fn geotweet(user: &str, ts: i64, country: Option<&str>) -> TweetRecord {
        TweetRecord {
            tweet_id: format!("{user}-{ts}"),
            user_id: user.into(),
            timestamp: ts,
            lang: "en".into(),
            text: "covid".into(),
            hashtags: vec![],
            urls: vec![],
            place_country: country.map(Into::into),
            retweeted_user_id: None,
            is_quote: false,
            profile_location: None,
        }
    }

    #[test]
    fn geotag_examples() {
        let corpus = vec![
            geotweet("a", 1, Some("US")),
            geotweet("a", 2, Some("US")),
            geotweet("a", 3, Some("US")),
            geotweet("b", 1, Some("US")),
            geotweet("b", 2, Some("CA")),
            geotweet("c", 1, None),
        ];
        let m = geotag_users(&corpus);
        assert_eq!(m.len(), 1);
        assert_eq!(m["a"], "US");
    }

    #[test]
    fn planted_movers() {
        let mut corpus = Vec::new();
        for i in 0..100 {
            let u = format!("u{i:03}");
            corpus.push(geotweet(&u, 1, Some("GB")));
            if i % 14 == 0 && i < 98 {
                corpus.push(geotweet(&u, 2, Some("FR")));
            }
        }
        let movers = (0..100).filter(|i| i % 14 == 0 && *i < 98).count();
        assert_eq!(movers, 7);
        assert_eq!(geotag_users(&corpus).len(), 93);
    }

    #[test]
    fn latest_profile_string_wins() {
        let mut a = geotweet("a", 5, None);
        a.profile_location = Some("Old Town".into());
        let mut b = geotweet("a", 9, None);
        b.profile_location = Some("New Town".into());
        let mut c = geotweet("a", 7, None);
        c.profile_location = Some("  ".into());
        assert_eq!(profile_locations(&[b, a, c])["a"], "New Town");
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn merge_examples() {
        let tagged = map(&[("x", "UK"), ("y", "US")]);
        let parsed = map(&[("x", "US"), ("z", "CA")]);
        let merged = merge_locations(&tagged, &parsed);
        assert_eq!(
            merged,
            vec![
                GeoUser { user_id: "x".into(), country: "UK".into(), source: GeoSource::Merged },
                GeoUser { user_id: "y".into(), country: "US".into(), source: GeoSource::Geotag },
                GeoUser { user_id: "z".into(), country: "CA".into(), source: GeoSource::Profile },
            ]
        );
    }

    #[test]
    fn ten_conflicts_resolve_to_geotag() {
        let tagged: BTreeMap<_, _> = (0..10).map(|i| (format!("u{i}"), "GB".to_string())).collect();
        let parsed: BTreeMap<_, _> = (0..10).map(|i| (format!("u{i}"), "US".to_string())).collect();
        let merged = merge_locations(&tagged, &parsed);
        assert_eq!(merged.len(), 10);
        assert!(merged.iter().all(|u| u.country == "GB" && u.source == GeoSource::Merged));
    }

    #[test]
    fn precision_examples() {
        let a = map(&[("1", "US"), ("2", "GB")]);
        assert_eq!(geoparse_precision(&a, &a).unwrap(), 1.0);
        let b = map(&[("1", "GB"), ("2", "US")]);
        assert_eq!(geoparse_precision(&a, &b).unwrap(), 0.0);
        let c = map(&[("9", "US")]);
        assert!(matches!(geoparse_precision(&a, &c), Err(Error::NoOverlap)));

        let tagged: BTreeMap<_, _> = (0..100).map(|i| (format!("u{i}"), "US".to_string())).collect();
        let parsed: BTreeMap<_, _> = (0..100)
            .map(|i| (format!("u{i}"), if i < 93 { "US" } else { "CA" }.to_string()))
            .collect();
        assert_eq!(geoparse_precision(&tagged, &parsed).unwrap(), 0.93);
    }

    #[test]
    fn geo_users_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geo.csv");
        let users = merge_locations(&map(&[("a", "US")]), &map(&[("b", "GB")]));
        write_geo_users(&path, &users).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("user_id,country,source\n"));
        assert_eq!(read_geo_users(&path).unwrap(), users);
    }
}
