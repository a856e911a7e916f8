//! Deterministic synthetic corpus with planted ground truth.
//!
//! Three countries, each a set of politicians (the seeds) plus ordinary
//! users. Every ordinary user retweets one same-side politician heavily and
//! a few other users once, so the backbone keeps exactly the anchor edges
//! and every user's sign is known in advance. Alongside the corpus the
//! generator writes every fixture a pipeline run needs and a `truth.json`
//! with the planted values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Component, Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Substreams, TweetRecord};
use crate::error::{Error, Result};
use crate::leaning::{HashtagLexicon, Label};

/// Start of the synthetic collection window (2020-03-01T00:00:00Z).
const T0: i64 = 1_583_020_800;
const WINDOW_SECS: i64 = 60 * 86_400;
const SHARDS: usize = 2;

struct CountrySpec {
    code: &'static str,
    left_pols: usize,
    right_pols: usize,
    center_pols: usize,
    no_account: usize,
    left_users: usize,
    right_users: usize,
    /// Profile strings that resolve to this country alone.
    profiles: &'static [&'static str],
    langs: &'static [(&'static str, f64)],
    left_domains: &'static [&'static str],
    right_domains: &'static [&'static str],
    neutral_domains: &'static [&'static str],
}

const COUNTRIES: [CountrySpec; 3] = [
    CountrySpec {
        code: "US",
        left_pols: 20,
        right_pols: 10,
        center_pols: 3,
        no_account: 7,
        left_users: 680,
        right_users: 290,
        profiles: &[
            "Seattle, WA",
            "Austin, Texas",
            "Boston, MA",
            "Denver, Colorado",
            "Chicago, IL",
            "Atlanta, GA, United States",
            "Portland, Oregon",
            "Texas",
        ],
        langs: &[("en", 0.9), ("es", 0.1)],
        left_domains: &["nytimes.com", "washingtonpost.com", "cnn.com", "msnbc.com", "npr.org", "vox.com"],
        right_domains: &["foxnews.com", "breitbart.com", "dailycaller.com", "nypost.com", "thefederalist.com"],
        neutral_domains: &["reuters.com", "apnews.com"],
    },
    CountrySpec {
        code: "GB",
        left_pols: 12,
        right_pols: 10,
        center_pols: 2,
        no_account: 6,
        left_users: 318,
        right_users: 260,
        profiles: &[
            "Manchester, England",
            "Leeds, ENG",
            "Bristol, United Kingdom",
            "Glasgow, Scotland",
            "Cardiff, Wales",
        ],
        langs: &[("en", 0.97), ("cy", 0.03)],
        left_domains: &["theguardian.com", "independent.co.uk", "mirror.co.uk"],
        right_domains: &["dailymail.co.uk", "telegraph.co.uk", "thesun.co.uk"],
        neutral_domains: &["bbc.co.uk", "reuters.com"],
    },
    CountrySpec {
        code: "CA",
        left_pols: 10,
        right_pols: 10,
        center_pols: 2,
        no_account: 4,
        left_users: 190,
        right_users: 190,
        profiles: &[
            "Toronto, Ontario",
            "Vancouver, BC",
            "Montreal, Quebec",
            "Calgary, Alberta, Canada",
            "Ottawa, ON",
        ],
        langs: &[("en", 0.8), ("fr", 0.2)],
        left_domains: &["cbc.ca", "thestar.com"],
        right_domains: &["nationalpost.com", "torontosun.com"],
        neutral_domains: &["globalnews.ca", "reuters.com"],
    },
];

const GAZETTEER: &[[&str; 5]] = &[
    ["Seattle", "Washington", "WA", "United States", "US"],
    ["Austin", "Texas", "TX", "United States", "US"],
    ["Boston", "Massachusetts", "MA", "United States", "US"],
    ["Denver", "Colorado", "CO", "United States", "US"],
    ["Chicago", "Illinois", "IL", "United States", "US"],
    ["Atlanta", "Georgia", "GA", "United States", "US"],
    ["Portland", "Oregon", "OR", "United States", "US"],
    ["Paris", "Texas", "TX", "United States", "US"],
    ["Birmingham", "Alabama", "AL", "United States", "US"],
    ["London", "Kentucky", "KY", "United States", "US"],
    ["Manchester", "England", "ENG", "United Kingdom", "GB"],
    ["Leeds", "England", "ENG", "United Kingdom", "GB"],
    ["Bristol", "England", "ENG", "United Kingdom", "GB"],
    ["Glasgow", "Scotland", "SCT", "United Kingdom", "GB"],
    ["Cardiff", "Wales", "WLS", "United Kingdom", "GB"],
    ["London", "England", "ENG", "United Kingdom", "GB"],
    ["Birmingham", "England", "ENG", "United Kingdom", "GB"],
    ["Toronto", "Ontario", "ON", "Canada", "CA"],
    ["Vancouver", "British Columbia", "BC", "Canada", "CA"],
    ["Montreal", "Quebec", "QC", "Canada", "CA"],
    ["Calgary", "Alberta", "AB", "Canada", "CA"],
    ["Ottawa", "Ontario", "ON", "Canada", "CA"],
    ["London", "Ontario", "ON", "Canada", "CA"],
    ["Paris", "Ile-de-France", "IDF", "France", "FR"],
    ["Atlantis", "", "", "", ""],
];

const AMBIGUOUS_PROFILES: &[&str] = &["Paris", "London", "Birmingham"];
const UNKNOWN_PROFILES: &[&str] = &["Mars", "Neverland", "the moon", "somewhere over the rainbow"];

const TEXTS_EN: &[&str] = &[
    "covid19 cases keep rising here",
    "Stay home, the coronavirus is not over",
    "lockdown day {n} and counting",
    "New pandemic guidance just dropped",
    "Another covid update from the state",
    "panic buying again at the store",
    "social distancing works, please keep it up",
];
const TEXTS_ES: &[&str] = &["Quedate en casa, coronavirus dia {n}", "Nuevos casos de covid hoy"];
const TEXTS_FR: &[&str] = &["Confinement jour {n}, lockdown partout", "Le coronavirus progresse encore"];
const TEXTS_CY: &[&str] = &["Arhoswch adref, coronavirus", "lockdown diwrnod {n}"];
const OFF_TOPIC: &[&str] = &["Great game last night", "Anyone else watching the new series?", "Morning run done"];

/// Domains shared by a handful of users, below any sensible reach floor.
const LOW_REACH: &[&str] = &[
    "riverside-gazette.com",
    "hilltopherald.org",
    "prairievoice.net",
    "lakeshorebulletin.com",
    "oldtownpost.com",
    "valleydispatch.org",
];

/// (short host, publisher) pairs resolved without network access.
const PLATFORM_SHORTENERS: &[(&str, &str)] = &[
    ("nyti.ms", "nytimes.com"),
    ("wapo.st", "washingtonpost.com"),
    ("cnn.it", "cnn.com"),
    ("fxn.ws", "foxnews.com"),
    ("bbc.in", "bbc.co.uk"),
    ("gu.com", "theguardian.com"),
];
const GENERAL_SHORTENERS: &[&str] = &["bit.ly", "ow.ly", "tinyurl.com"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryTruth {
    pub country: String,
    pub politicians: usize,
    pub seeds_left: usize,
    pub seeds_right: usize,
    /// Users that end up with a score: seeds plus ordinary users.
    pub scored_users: usize,
    pub left_users: usize,
    pub left_fraction: f64,
    pub bridging_users: usize,
}

/// Planted values, written to `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub seed: u64,
    pub records_written: usize,
    pub duplicate_records: usize,
    pub malformed_lines: usize,
    pub off_topic_records: usize,
    pub quote_tweets: usize,
    pub countries: Vec<CountryTruth>,
    /// Geotagged in more than one country and never geoparseable.
    pub movers: Vec<String>,
    /// Geotagged in one country with a profile naming another.
    pub geo_conflicts: BTreeMap<String, String>,
    pub ambiguous_profiles: Vec<String>,
    pub unknown_profiles: Vec<String>,
    pub low_reach_domains: Vec<String>,
    /// Side of every user that receives a score, by country.
    pub sides: BTreeMap<String, BTreeMap<String, Label>>,
}

/// Shared inputs the generator reads and the written config points at.
#[derive(Debug, Clone)]
pub struct SharedFixtures {
    pub substreams: PathBuf,
    pub hashtags_left: PathBuf,
    pub hashtags_right: PathBuf,
    pub suffix_rules: PathBuf,
}

impl SharedFixtures {
    /// The standard file names inside a fixtures directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            substreams: dir.join("substreams.json"),
            hashtags_left: dir.join("hashtags_left.txt"),
            hashtags_right: dir.join("hashtags_right.txt"),
            suffix_rules: dir.join("public_suffix_list.dat"),
        }
    }
}

#[derive(Debug, Clone)]
struct User {
    id: String,
    country: &'static str,
    side: Option<Label>,
    lang: &'static str,
    geotag: bool,
    profile: Option<String>,
    /// Domains this user shares from.
    diet: Vec<&'static str>,
}

struct Builder {
    rng: ChaCha8Rng,
    next_id: u64,
    records: Vec<TweetRecord>,
    short_codes: u64,
    cache: Vec<(String, String)>,
    quotes: usize,
}

impl Builder {
    fn timestamp(&mut self) -> i64 {
        T0 + self.rng.random_range(0..WINDOW_SECS)
    }

    fn text(&mut self, lang: &str) -> String {
        let pool = match lang {
            "es" => TEXTS_ES,
            "fr" => TEXTS_FR,
            "cy" => TEXTS_CY,
            _ => TEXTS_EN,
        };
        let n = self.rng.random_range(1..60).to_string();
        pool.choose(&mut self.rng).expect("non-empty").replace("{n}", &n)
    }

    fn record(&mut self, user: &User, text: String) -> TweetRecord {
        self.next_id += 1;
        let timestamp = self.timestamp();
        TweetRecord {
            tweet_id: self.next_id.to_string(),
            user_id: user.id.clone(),
            timestamp,
            lang: user.lang.to_owned(),
            text,
            hashtags: Vec::new(),
            urls: Vec::new(),
            place_country: user.geotag.then(|| user.country.to_owned()),
            retweeted_user_id: None,
            is_quote: false,
            profile_location: user.profile.clone(),
        }
    }

    fn retweet(&mut self, from: &User, to: &User) {
        let body = self.text(from.lang);
        let mut r = self.record(from, format!("RT @{}: {body}", to.id));
        r.retweeted_user_id = Some(to.id.clone());
        self.records.push(r);
    }

    fn quote(&mut self, from: &User, to: &User) {
        let body = self.text(from.lang);
        let mut r = self.record(from, format!("{body} (quoting {})", to.id));
        r.retweeted_user_id = Some(to.id.clone());
        r.is_quote = true;
        self.quotes += 1;
        self.records.push(r);
    }

    /// A link to `domain`, sometimes through a shortener.
    fn url(&mut self, domain: &str) -> String {
        self.short_codes += 1;
        let code = format!("{:x}{}", self.short_codes * 2_654_435_761 % 1_000_003, self.short_codes);
        if let Some((short, _)) = PLATFORM_SHORTENERS.iter().find(|(_, d)| *d == domain) {
            if self.rng.random_bool(0.4) {
                return format!("https://{short}/{code}");
            }
        }
        let host = match domain {
            "cnn.com" => "edition.cnn.com".to_owned(),
            "theguardian.com" => "amp.theguardian.com".to_owned(),
            "bbc.co.uk" => "www.bbc.co.uk".to_owned(),
            d if self.rng.random_bool(0.5) => format!("www.{d}"),
            d => d.to_owned(),
        };
        let full = format!("https://{host}/2020/03/story-{code}?utm_source=twitter");
        if self.rng.random_bool(0.1) {
            let general = *GENERAL_SHORTENERS.choose(&mut self.rng).expect("non-empty");
            let short = format!("https://{general}/{code}");
            // One in five general short links is missing from the cache.
            if self.rng.random_bool(0.8) {
                self.cache.push((short.clone(), full));
            }
            return short;
        }
        full
    }

    fn original(&mut self, user: &User, tags: &[&str], lex: &(Vec<&str>, Vec<&str>)) {
        let text = self.text(user.lang);
        let mut r = self.record(user, text);
        if let Some(side) = user.side {
            // Only the US conversation carries partisan hashtags.
            if user.country == "US" && self.rng.random_bool(0.5) {
                let (own, other) = match side {
                    Label::Left => (&lex.0, &lex.1),
                    Label::Right => (&lex.1, &lex.0),
                };
                let pool = if self.rng.random_bool(0.04) { other } else { own };
                r.hashtags.push(pool.choose(&mut self.rng).expect("non-empty lexicon").to_string());
            }
        }
        r.hashtags.extend(tags.iter().map(|t| t.to_string()));
        if !user.diet.is_empty() && self.rng.random_bool(0.6) {
            let d = *user.diet.choose(&mut self.rng).expect("non-empty diet");
            let url = self.url(d);
            r.urls.push(url);
        }
        self.records.push(r);
    }
}

fn choose_lang(rng: &mut ChaCha8Rng, langs: &[(&'static str, f64)]) -> &'static str {
    let mut x: f64 = rng.random();
    for (l, p) in langs {
        if x < *p {
            return l;
        }
        x -= p;
    }
    langs[0].0
}

fn diet(rng: &mut ChaCha8Rng, spec: &CountrySpec, side: Label) -> Vec<&'static str> {
    let (own, other) = match side {
        Label::Left => (spec.left_domains, spec.right_domains),
        Label::Right => (spec.right_domains, spec.left_domains),
    };
    let n = rng.random_range(1..=own.len().min(3));
    let mut d: Vec<&'static str> = own.choose_multiple(rng, n).copied().collect();
    if rng.random_bool(0.4) {
        d.push(*spec.neutral_domains.choose(rng).expect("non-empty"));
    }
    if rng.random_bool(0.1) {
        d.push(*other.choose(rng).expect("non-empty"));
    }
    d
}

/// `target` written relative to `base`, both taken as absolute.
fn relative_to(target: &Path, base: &Path) -> PathBuf {
    let t: Vec<Component> = target.components().collect();
    let b: Vec<Component> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &t[common..] {
        out.push(c);
    }
    out
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(p).map_err(|e| Error::io(p, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Generates the corpus and fixtures into `out_dir` and returns the truth.
pub fn generate(out_dir: &Path, shared: &SharedFixtures, seed: u64) -> Result<Truth> {
    let substreams = Substreams::load(&shared.substreams)?;
    let lexicon = HashtagLexicon::load(&shared.hashtags_left, &shared.hashtags_right)?;
    let lex: (Vec<&str>, Vec<&str>) = (
        lexicon.left().iter().map(String::as_str).collect(),
        lexicon.right().iter().map(String::as_str).collect(),
    );
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let corpus_dir = out_dir.join("corpus");
    if corpus_dir.exists() {
        std::fs::remove_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;
    }
    std::fs::create_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = COUNTRIES
        .iter()
        .map(|c| c.left_pols + c.right_pols + c.center_pols + c.left_users + c.right_users + 80)
        .sum();
    let mut ids: Vec<u64> = (0..total as u64).map(|i| 100_000 + i * 7).collect();
    ids.shuffle(&mut rng);
    let mut ids = ids.into_iter().map(|i| i.to_string());
    let mut next_user = || ids.next().expect("id pool large enough");

    let mut truth = Truth {
        seed,
        records_written: 0,
        duplicate_records: 0,
        malformed_lines: 0,
        off_topic_records: 0,
        quote_tweets: 0,
        countries: Vec::new(),
        movers: Vec::new(),
        geo_conflicts: BTreeMap::new(),
        ambiguous_profiles: Vec::new(),
        unknown_profiles: Vec::new(),
        low_reach_domains: LOW_REACH.iter().map(|d| d.to_string()).collect(),
        sides: BTreeMap::new(),
    };

    // Users.
    let mut pols: BTreeMap<(&str, Label), Vec<User>> = BTreeMap::new();
    let mut ordinary: BTreeMap<(&str, Label), Vec<User>> = BTreeMap::new();
    let mut centers: Vec<User> = Vec::new();
    for spec in &COUNTRIES {
        let mut seed_rows = String::from("user_id,position,has_account\n");
        let mut make = |rng: &mut ChaCha8Rng, side: Option<Label>, politician: bool| {
            let geotag = politician || rng.random_bool(0.55);
            let profile = if !geotag || rng.random_bool(0.3) {
                Some(spec.profiles.choose(rng).expect("non-empty").to_string())
            } else {
                None
            };
            User {
                id: next_user(),
                country: spec.code,
                side,
                lang: choose_lang(rng, spec.langs),
                geotag,
                profile,
                diet: side.map(|s| diet(rng, spec, s)).unwrap_or_default(),
            }
        };
        for (side, n) in [(Label::Left, spec.left_pols), (Label::Right, spec.right_pols)] {
            let v: Vec<User> = (0..n).map(|_| make(&mut rng, Some(side), true)).collect();
            for u in &v {
                let pos = if side == Label::Left { "left" } else { "right" };
                let _ = writeln!(seed_rows, "{},{pos},true", u.id);
            }
            pols.insert((spec.code, side), v);
        }
        for _ in 0..spec.center_pols {
            let u = make(&mut rng, None, true);
            let _ = writeln!(seed_rows, "{},center,true", u.id);
            centers.push(u);
        }
        for i in 0..spec.no_account {
            let pos = ["left", "right", "center"][i % 3];
            let _ = writeln!(seed_rows, ",{pos},false");
        }
        write_file(&out_dir.join(format!("seeds_{}.csv", spec.code)), &seed_rows)?;
        for (side, n) in [(Label::Left, spec.left_users), (Label::Right, spec.right_users)] {
            let v: Vec<User> = (0..n).map(|_| make(&mut rng, Some(side), false)).collect();
            ordinary.insert((spec.code, side), v);
        }
    }

    // Planted geolocation cases among US ordinary users: geotagged in the US
    // with a Canadian profile string.
    for u in ordinary.get_mut(&("US", Label::Left)).expect("US left").iter_mut().take(10) {
        u.geotag = true;
        u.profile = Some("Toronto, Ontario".into());
        truth.geo_conflicts.insert(u.id.clone(), "US".into());
    }
    for u in ordinary.get_mut(&("US", Label::Right)).expect("US right").iter_mut().take(5) {
        u.geotag = true;
        u.profile = Some("Vancouver, BC".into());
        truth.geo_conflicts.insert(u.id.clone(), "US".into());
    }

    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)),
        next_id: 1_240_000_000_000_000_000,
        records: Vec::new(),
        short_codes: 0,
        cache: Vec::new(),
        quotes: 0,
    };

    for spec in &COUNTRIES {
        let mut sides = BTreeMap::new();
        for side in [Label::Left, Label::Right] {
            let own_pols = &pols[&(spec.code, side)];
            let other_pols = &pols[&(spec.code, side.flipped())];
            let own_users = &ordinary[&(spec.code, side)];
            let other_users = &ordinary[&(spec.code, side.flipped())];

            for (i, p) in own_pols.iter().enumerate() {
                sides.insert(p.id.clone(), side);
                for _ in 0..b.rng.random_range(6..=10) {
                    b.original(p, &[], &lex);
                }
                // Same-side politicians form a dense core, with the odd
                // retweet across the aisle.
                let peers: Vec<&User> = own_pols
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| q)
                    .collect::<Vec<_>>()
                    .choose_multiple(&mut b.rng, 4)
                    .copied()
                    .collect();
                for q in peers {
                    for _ in 0..b.rng.random_range(3..=6) {
                        b.retweet(p, q);
                    }
                }
                if b.rng.random_bool(0.2) {
                    let q = other_pols.choose(&mut b.rng).expect("non-empty");
                    b.retweet(p, q);
                }
            }

            for (i, u) in own_users.iter().enumerate() {
                sides.insert(u.id.clone(), side);
                for _ in 0..b.rng.random_range(3..=7) {
                    b.original(u, &[], &lex);
                }
                let anchor = &own_pols[i % own_pols.len()];
                for _ in 0..b.rng.random_range(12..=18) {
                    b.retweet(u, anchor);
                }
                // Two distinct same-side peers keep every anchor edge
                // significant from the user's endpoint.
                let peers: Vec<&User> = own_users
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| q)
                    .collect::<Vec<_>>()
                    .choose_multiple(&mut b.rng, 2)
                    .copied()
                    .collect();
                for q in peers {
                    b.retweet(u, q);
                }
                if b.rng.random_bool(0.3) {
                    let q = other_users.choose(&mut b.rng).expect("non-empty");
                    b.retweet(u, q);
                }
                if b.rng.random_bool(0.3) {
                    let q = other_pols.choose(&mut b.rng).expect("non-empty");
                    b.retweet(u, q);
                }
                if b.rng.random_bool(0.05) {
                    let q = other_pols.choose(&mut b.rng).expect("non-empty");
                    b.quote(u, q);
                }
            }
        }
        truth.sides.insert(spec.code.to_owned(), sides);
    }

    // Bridging users: ordinary users retweeting politicians of another
    // country on their own side.
    let mut bridging: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (from, to, n) in [("GB", "US", 40), ("CA", "US", 30), ("US", "GB", 20), ("US", "CA", 15), ("CA", "GB", 10)] {
        for side in [Label::Left, Label::Right] {
            let users = &ordinary[&(from, side)];
            let targets = &pols[&(to, side)];
            for u in users.iter().rev().take(n / 2) {
                let t = targets.choose(&mut b.rng).expect("non-empty");
                b.retweet(u, t);
                b.retweet(u, t);
                bridging.entry(from).or_default().insert(u.id.clone());
            }
        }
    }

    // Center politicians tweet but never retweet.
    for u in &centers {
        for _ in 0..4 {
            b.original(u, &[], &lex);
        }
    }

    // Users that must never be located.
    let us_left = pols[&("US", Label::Left)].clone();
    let unlocated = |b: &mut Builder, id: String, profile: Option<String>, tags: Vec<&'static str>| {
        let mut u = User {
            id,
            country: "US",
            side: None,
            lang: "en",
            geotag: false,
            profile,
            diet: Vec::new(),
        };
        for (k, c) in tags.into_iter().enumerate() {
            u.geotag = !c.is_empty();
            u.country = c;
            let r = b.record(&u, format!("covid diary entry {k}"));
            b.records.push(r);
        }
        // They retweet a located politician; none may enter a network.
        let t = us_left.choose(&mut b.rng).expect("non-empty");
        u.geotag = false;
        u.country = "US";
        b.retweet(&u, t);
    };
    for i in 0..12 {
        let id = next_user();
        let second = if i % 2 == 0 { "CA" } else { "GB" };
        unlocated(&mut b, id.clone(), None, vec!["US", second, "US"]);
        truth.movers.push(id);
    }
    for i in 0..24 {
        let id = next_user();
        let p = AMBIGUOUS_PROFILES[i % AMBIGUOUS_PROFILES.len()];
        unlocated(&mut b, id.clone(), Some(p.to_owned()), vec!["", ""]);
        truth.ambiguous_profiles.push(id);
    }
    for i in 0..12 {
        let id = next_user();
        let p = UNKNOWN_PROFILES[i % UNKNOWN_PROFILES.len()];
        unlocated(&mut b, id.clone(), Some(p.to_owned()), vec![""]);
        truth.unknown_profiles.push(id);
    }

    // Low-reach domains shared by a handful of US users each.
    let us_users: Vec<User> = ordinary[&("US", Label::Left)]
        .iter()
        .chain(&ordinary[&("US", Label::Right)])
        .cloned()
        .collect();
    for (i, d) in LOW_REACH.iter().enumerate() {
        for u in us_users.choose_multiple(&mut b.rng, 3 + 4 * i) {
            let mut u = u.clone();
            u.diet = vec![d];
            let text = b.text(u.lang);
            let mut r = b.record(&u, text);
            let url = b.url(d);
            r.urls.push(url);
            b.records.push(r);
        }
    }

    // Off-topic tweets fall outside every sub-stream.
    let sample: Vec<User> = us_users.choose_multiple(&mut b.rng, 300).cloned().collect();
    for u in &sample {
        let text = OFF_TOPIC.choose(&mut b.rng).expect("non-empty").to_string();
        let r = b.record(u, text);
        b.records.push(r);
    }
    truth.off_topic_records = sample.len();
    truth.quote_tweets = b.quotes;

    // Shuffle, duplicate some records across shards, and corrupt a few lines.
    let mut records = std::mem::take(&mut b.records);
    records.shuffle(&mut b.rng);
    let dups: Vec<TweetRecord> = records.choose_multiple(&mut b.rng, 250).cloned().collect();
    truth.duplicate_records = dups.len();
    let mut shards: Vec<Vec<String>> = vec![Vec::new(); SHARDS];
    let chunk = records.len().div_ceil(SHARDS);
    for (i, r) in records.iter().enumerate() {
        shards[i / chunk].push(serde_json::to_string(r).map_err(|e| Error::json("synthetic record", e))?);
    }
    for r in &dups {
        shards[SHARDS - 1].push(serde_json::to_string(r).map_err(|e| Error::json("synthetic record", e))?);
    }
    let malformed = ["{\"id\": \"broken", "not json at all", "{\"id\": 5, \"user_id\": null}"];
    for (i, m) in malformed.iter().enumerate() {
        let at = (i + 1) * shards[0].len() / (malformed.len() + 1);
        shards[0].insert(at, m.to_string());
    }
    truth.malformed_lines = malformed.len();
    truth.records_written = records.len() + dups.len();
    for (i, lines) in shards.iter().enumerate() {
        let mut text = lines.join("\n");
        text.push('\n');
        write_file(&corpus_dir.join(format!("part-{i:03}.jsonl")), &text)?;
    }

    // Ground truth per country.
    for spec in &COUNTRIES {
        let scored = spec.left_pols + spec.right_pols + spec.left_users + spec.right_users;
        let left = spec.left_pols + spec.left_users;
        truth.countries.push(CountryTruth {
            country: spec.code.to_owned(),
            politicians: spec.left_pols + spec.right_pols + spec.center_pols + spec.no_account,
            seeds_left: spec.left_pols,
            seeds_right: spec.right_pols,
            scored_users: scored,
            left_users: left,
            left_fraction: left as f64 / scored as f64,
            bridging_users: bridging.get(spec.code).map_or(0, BTreeSet::len),
        });
    }

    // Side fixtures.
    let mut gaz = String::from("city,state_name,state_abbrev,country_name,country_code\n");
    for row in GAZETTEER {
        let _ = writeln!(gaz, "{}", row.join(","));
    }
    write_file(&out_dir.join("gazetteer.csv"), &gaz)?;

    let mut sh = String::from("host,kind,target_domain\n");
    for (h, d) in PLATFORM_SHORTENERS {
        let _ = writeln!(sh, "{h},platform,{d}");
    }
    for h in GENERAL_SHORTENERS {
        let _ = writeln!(sh, "{h},general,");
    }
    write_file(&out_dir.join("shorteners.csv"), &sh)?;

    let mut cache = String::from("short_url,full_url\n");
    for (s, f) in &b.cache {
        let _ = writeln!(cache, "{s},{f}");
    }
    write_file(&out_dir.join("resolved_cache.csv"), &cache)?;

    let mut rl = String::new();
    for id in substreams.stream_ids() {
        for interval in 0..3u64 {
            let delivered = 1000 + 100 * u64::from(id) + interval;
            // The busiest English streams hit the rate limit.
            let skipped = if matches!(id, 4 | 5) { delivered / 9 } else { 0 };
            let _ = writeln!(
                rl,
                "{{\"stream_id\":{id},\"delivered_count\":{delivered},\"skipped_count\":{skipped}}}"
            );
        }
    }
    write_file(&out_dir.join("ratelimits.jsonl"), &rl)?;

    write_file(&out_dir.join("external_scores.csv"), &external_scores())?;

    let base = absolute(out_dir)?;
    let rel = |p: &Path| -> Result<String> {
        Ok(relative_to(&absolute(p)?, &base).to_string_lossy().replace('\\', "/"))
    };
    let config = format!(
        r#"# Synthetic three-country run. Paths are relative to this file.
corpus_path = "corpus"
output_dir = "out"
countries = ["US", "GB", "CA"]
rng_seed = {seed}
hashtag_country = "US"

[fixtures]
gazetteer = "gazetteer.csv"
substreams = "{substreams}"
rate_limits = "ratelimits.jsonl"
hashtags_left = "{left}"
hashtags_right = "{right}"
shorteners = "shorteners.csv"
resolved_cache = "resolved_cache.csv"
suffix_rules = "{suffix}"
external_scores = ["external_scores.csv"]

[fixtures.seeds]
US = "seeds_US.csv"
GB = "seeds_GB.csv"
CA = "seeds_CA.csv"

[report]
validation_country = "US"
"#,
        substreams = rel(&shared.substreams)?,
        left = rel(&shared.hashtags_left)?,
        right = rel(&shared.hashtags_right)?,
        suffix = rel(&shared.suffix_rules)?,
    );
    write_file(&out_dir.join("config.toml"), &config)?;

    let mut t = serde_json::to_string_pretty(&truth).map_err(|e| Error::json("truth", e))?;
    t.push('\n');
    write_file(&out_dir.join("truth.json"), &t)?;
    Ok(truth)
}

/// Three reference sources: a numeric survey, an ordinal rating and one
/// too small to compare.
fn external_scores() -> String {
    let numeric: &[(&str, f64)] = &[
        ("nytimes.com", -0.62),
        ("washingtonpost.com", -0.58),
        ("cnn.com", -0.55),
        ("msnbc.com", -0.74),
        ("npr.org", -0.41),
        ("vox.com", -0.66),
        ("reuters.com", -0.05),
        ("apnews.com", -0.08),
        ("foxnews.com", 0.71),
        ("breitbart.com", 0.88),
        ("dailycaller.com", 0.79),
        ("nypost.com", 0.45),
        ("thefederalist.com", 0.83),
        ("riverside-gazette.com", 0.3),
        ("hilltopherald.org", -0.2),
        ("prairievoice.net", 0.6),
    ];
    let ordinal: &[(&str, &str)] = &[
        ("https://www.nytimes.com", "CL"),
        ("washingtonpost.com", "CL"),
        ("edition.cnn.com", "L"),
        ("msnbc.com", "L"),
        ("npr.org", "C"),
        ("reuters.com", "C"),
        ("apnews.com", "C"),
        ("foxnews.com", "R"),
        ("breitbart.com", "ER"),
        ("nypost.com", "CR"),
        ("dailycaller.com", "R"),
        ("oldtownpost.com", "C"),
    ];
    let mut out = String::from("domain,score,kind,source_name\n");
    for (d, s) in numeric {
        let _ = writeln!(out, "{d},{s},numeric,synthetic_survey");
    }
    for (d, s) in ordinal {
        let _ = writeln!(out, "{d},{s},ordinal,synthetic_ratings");
    }
    for (d, s) in [("vox.com", -0.5), ("valleydispatch.org", 0.1)] {
        let _ = writeln!(out, "{d},{s},numeric,tiny_panel");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths() {
        assert_eq!(relative_to(Path::new("/a/b/c.txt"), Path::new("/a/b/d")), PathBuf::from("../c.txt"));
        assert_eq!(relative_to(Path::new("/a/x"), Path::new("/a")), PathBuf::from("x"));
    }

    #[test]
    fn planted_fractions() {
        let us = &COUNTRIES[0];
        let scored = us.left_pols + us.right_pols + us.left_users + us.right_users;
        assert_eq!(scored, 1000);
        assert_eq!(us.left_pols + us.left_users, 700);
    }
}
