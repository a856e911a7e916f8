use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Label, SeedLabel, SeedOrigin};
use crate::corpus::TweetRecord;
use crate::error::{Error, Result};

/// Partisan hashtag lists. Tags are stored lowercase without a leading '#'.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HashtagLexicon {
    left: BTreeSet<String>,
    right: BTreeSet<String>,
}

fn canonical_tag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

impl HashtagLexicon {
    pub fn new<I, J, S, T>(left: I, right: J) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let collect = |it: Vec<String>| -> BTreeSet<String> {
            it.into_iter().filter(|t| !t.is_empty()).collect()
        };
        let left = collect(left.into_iter().map(|t| canonical_tag(t.as_ref())).collect());
        let right = collect(right.into_iter().map(|t| canonical_tag(t.as_ref())).collect());
        if let Some(shared) = left.intersection(&right).next() {
            return Err(Error::InvalidInput(format!(
                "hashtag {shared:?} is listed on both sides"
            )));
        }
        Ok(Self { left, right })
    }

    /// Loads one-tag-per-line files.
    pub fn load(left: &Path, right: &Path) -> Result<Self> {
        let read = |p: &Path| -> Result<Vec<String>> {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(text.lines().map(str::to_owned).collect())
        };
        Self::new(read(left)?, read(right)?)
    }

    pub fn left(&self) -> &BTreeSet<String> {
        &self.left
    }

    pub fn right(&self) -> &BTreeSet<String> {
        &self.right
    }

    pub fn side(&self, tag: &str) -> Option<Label> {
        let tag = canonical_tag(tag);
        if self.left.contains(&tag) {
            Some(Label::Left)
        } else if self.right.contains(&tag) {
            Some(Label::Right)
        } else {
            None
        }
    }
}

/// Right- and left-leaning hashtag occurrences posted by one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TagCounts {
    pub right: u64,
    pub left: u64,
}

/// Counts partisan hashtag occurrences per user over every tweet they posted.
pub fn user_tag_counts<'a, I>(tweets: I, lex: &HashtagLexicon) -> BTreeMap<String, TagCounts>
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut out: BTreeMap<String, TagCounts> = BTreeMap::new();
    for t in tweets {
        for tag in &t.hashtags {
            match lex.side(tag) {
                Some(Label::Left) => out.entry(t.user_id.clone()).or_default().left += 1,
                Some(Label::Right) => out.entry(t.user_id.clone()).or_default().right += 1,
                None => {}
            }
        }
    }
    out
}

/// `(R - L) / (R + L)`, or `None` when the user posted no partisan tags.
pub fn hashtag_score(counts: TagCounts) -> Option<f64> {
    let total = counts.right + counts.left;
    if total == 0 {
        return None;
    }
    Some((counts.right as f64 - counts.left as f64) / total as f64)
}

/// Users whose hashtag score is strictly beyond `threshold` on either side.
pub fn hashtag_scores(counts: &BTreeMap<String, TagCounts>, threshold: f64) -> Vec<SeedLabel> {
    counts
        .iter()
        .filter_map(|(user, c)| {
            let score = hashtag_score(*c)?;
            let label = if score < -threshold {
                Label::Left
            } else if score > threshold {
                Label::Right
            } else {
                return None;
            };
            Some(SeedLabel {
                user_id: user.clone(),
                label,
                origin: SeedOrigin::Hashtag,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(r: u64, l: u64) -> TagCounts {
        TagCounts { right: r, left: l }
    }

    fn classify(r: u64, l: u64) -> Option<Label> {
        let m: BTreeMap<String, TagCounts> = [("u".to_string(), counts(r, l))].into();
        hashtag_scores(&m, 0.9).first().map(|s| s.label)
    }

    #[test]
    fn score_examples() {
        assert_eq!(hashtag_score(counts(0, 5)), Some(-1.0));
        assert_eq!(classify(0, 5), Some(Label::Left));
        assert_eq!(hashtag_score(counts(5, 5)), Some(0.0));
        assert_eq!(classify(5, 5), None);
        assert_eq!(hashtag_score(counts(19, 1)), Some(0.9));
        assert_eq!(classify(19, 1), None);
        assert_eq!(classify(39, 1), Some(Label::Right));
        assert_eq!(hashtag_score(counts(0, 0)), None);
    }

    #[test]
    fn bundled_lexicon() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let lex = HashtagLexicon::load(&root.join("hashtags_left.txt"), &root.join("hashtags_right.txt")).unwrap();
        assert_eq!(lex.left().len(), 314);
        assert_eq!(lex.right().len(), 246);
        assert_eq!(lex.side("#BidenHarris2020"), Some(Label::Left));
        assert_eq!(lex.side("maga"), Some(Label::Right));
        assert_eq!(lex.side("covid"), None);
    }

    #[test]
    fn overlapping_lists_rejected() {
        assert!(HashtagLexicon::new(["a", "b"], ["#B"]).is_err());
    }

    #[test]
    fn counts_from_tweets() {
        let lex = HashtagLexicon::new(["voteblue"], ["maga"]).unwrap();
        let mk = |user: &str, tags: &[&str]| TweetRecord {
            tweet_id: format!("{user}{}", tags.len()),
            user_id: user.into(),
            timestamp: 0,
            lang: "en".into(),
            text: String::new(),
            hashtags: tags.iter().map(|t| t.to_string()).collect(),
            urls: vec![],
            place_country: None,
            retweeted_user_id: None,
            is_quote: false,
            profile_location: None,
        };
        let tweets = [mk("a", &["VoteBlue", "maga", "covid"]), mk("a", &["voteblue"]), mk("b", &["x"])];
        let c = user_tag_counts(&tweets, &lex);
        assert_eq!(c["a"], counts(1, 2));
        assert!(!c.contains_key("b"));
    }
}
