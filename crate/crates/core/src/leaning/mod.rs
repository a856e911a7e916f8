//! Political leaning estimation by seeded label spreading.
//!
//! Seeds carry a left or right label. Spreading runs over the symmetric
//! normalized backbone with a two-column indicator matrix (one column per
//! side); a user's score is `(f_right - f_left) / (f_left + f_right)`, which
//! lies in [-1, 1]. Users that no seed reaches have no score at all.

mod bridge;
mod cv;
mod hashtag;
mod operator;
mod seeds;
mod spread;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bridge::{augment_with_bridges, bridging_users, dual_predict, CountryModel, DualPrediction};
pub use cv::{default_alpha_grid, select_alpha, AlphaSelection, CV_SHUFFLE_SEED};
pub use hashtag::{hashtag_score, hashtag_scores, user_tag_counts, HashtagLexicon, TagCounts};
pub use operator::{normalize_adjacency, NormalizedOperator};
pub use seeds::{load_seeds, SeedLoad};
pub use spread::{label_spread, SpreadConfig, SpreadResult};

/// Seed side. Numeric value is the sign of the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Left,
    Right,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Left => -1,
            Label::Right => 1,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Left => Label::Right,
            Label::Right => Label::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedOrigin {
    Politician,
    Hashtag,
}

impl fmt::Display for SeedOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedOrigin::Politician => "politician",
            SeedOrigin::Hashtag => "hashtag",
        })
    }
}

impl FromStr for SeedOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "politician" => Ok(SeedOrigin::Politician),
            "hashtag" => Ok(SeedOrigin::Hashtag),
            other => Err(Error::InvalidInput(format!("unknown seed origin {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLabel {
    pub user_id: String,
    pub label: Label,
    pub origin: SeedOrigin,
}

/// user_id → label lookup, the form spreading consumes.
pub fn seed_map(seeds: &[SeedLabel]) -> BTreeMap<String, Label> {
    seeds
        .iter()
        .map(|s| (s.user_id.clone(), s.label))
        .collect()
}

/// Estimated leaning of one user within one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaningScore {
    pub user_id: String,
    pub country: String,
    pub score: f64,
    pub is_seed: bool,
    pub origin: SeedOrigin,
}

/// Maps a raw spreading score in [0, 1] onto [-1, 1].
pub fn rescale(raw: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&raw) {
        Ok(2.0 * raw - 1.0)
    } else {
        Err(Error::Domain {
            value: raw,
            domain: "[0, 1]",
        })
    }
}

/// Three-way sign; an exact zero is its own class.
pub fn leaning_class(score: f64) -> Ordering {
    score.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

/// Number of users scored in both runs and the fraction of them whose
/// scores share a sign.
pub fn compare_seedings(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<(usize, f64)> {
    let mut common = 0usize;
    let mut agree = 0usize;
    for (u, sa) in a {
        if let Some(sb) = b.get(u) {
            common += 1;
            if leaning_class(*sa) == leaning_class(*sb) {
                agree += 1;
            }
        }
    }
    if common == 0 {
        return Err(Error::NoOverlap);
    }
    Ok((common, agree as f64 / common as f64))
}

pub fn write_scores(path: &Path, scores: &[LeaningScore]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for s in scores {
        w.serialize(s).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<LeaningScore>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<LeaningScore>, _>>()
        .map_err(|e| Error::csv(path, e))
}

/// Packages spread output as per-user score records.
pub fn to_leaning_scores(
    scores: &BTreeMap<String, f64>,
    seeds: &BTreeMap<String, Label>,
    country: &str,
    origin: SeedOrigin,
) -> Vec<LeaningScore> {
    scores
        .iter()
        .map(|(u, s)| LeaningScore {
            user_id: u.clone(),
            country: country.to_owned(),
            score: *s,
            is_seed: seeds.contains_key(u),
            origin,
        })
        .collect()
}
