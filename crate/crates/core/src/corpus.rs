//! Tweet archive ingestion.
//!
//! Archives are JSON-lines files, one tweet per line. Ingestion replays the
//! keyword/language sub-stream partitioning over an archive, estimates
//! per-stream sampling rates from rate-limit sidecar records and unions the
//! sub-streams back into a single deduplicated corpus.
//!
//! Keyword matching is a case-insensitive substring test on the lowercased
//! text. This is a superset of what a tokenizing track filter would accept.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One normalized tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    #[serde(rename = "id")]
    pub tweet_id: String,
    pub user_id: String,
    #[serde(rename = "created_at")]
    pub timestamp: i64,
    pub lang: String,
    pub text: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    pub place_country: Option<String>,
    pub retweeted_user_id: Option<String>,
    #[serde(default)]
    pub is_quote: bool,
    pub profile_location: Option<String>,
}

impl TweetRecord {
    /// The retweeted author, when this is a simple retweet (not a quote).
    pub fn simple_retweet_of(&self) -> Option<&str> {
        if self.is_quote {
            None
        } else {
            self.retweeted_user_id.as_deref()
        }
    }
}

/// Lazy reader over a JSON-lines archive.
///
/// Lines that fail to parse are skipped and counted; blank lines are ignored.
pub struct CorpusReader<R> {
    reader: R,
    path: PathBuf,
    buf: Vec<u8>,
    line_no: usize,
    skipped: usize,
    remaining: Option<usize>,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, path: impl Into<PathBuf>, limit: Option<usize>) -> Self {
        Self {
            reader,
            path: path.into(),
            buf: Vec::new(),
            line_no: 0,
            skipped: 0,
            remaining: limit,
        }
    }

    /// Number of malformed lines skipped so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<TweetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == Some(0) {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
            self.line_no += 1;
            let line = trim_ascii(&self.buf);
            if line.is_empty() {
                continue;
            }
            match serde_json::from_slice::<TweetRecord>(line) {
                Ok(record) => {
                    if let Some(n) = self.remaining.as_mut() {
                        *n -= 1;
                    }
                    return Some(Ok(record));
                }
                Err(e) => {
                    log::warn!(
                        "{}:{}: skipping malformed line: {e}",
                        self.path.display(),
                        self.line_no
                    );
                    self.skipped += 1;
                }
            }
        }
    }
}

fn trim_ascii(bytes: &[u8]) -> &[u8] {
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(bytes.len());
    let end = bytes
        .iter()
        .rposition(|b| !b.is_ascii_whitespace())
        .map_or(start, |i| i + 1);
    &bytes[start..end]
}

/// Opens a JSON-lines archive for lazy reading.
pub fn read_corpus(
    path: impl AsRef<Path>,
    limit: Option<usize>,
) -> Result<CorpusReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader::new(BufReader::new(file), path, limit))
}

/// Reads a whole archive into memory, returning the records and the number
/// of malformed lines skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<(Vec<TweetRecord>, usize)> {
    let mut reader = read_corpus(path, None)?;
    let records = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((records, reader.skipped()))
}

/// Lists the archive shards behind `path`: the file itself, or every
/// `*.jsonl` file in a directory, sorted by name.
pub fn corpus_shards(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut shards = Vec::new();
    for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.extension().is_some_and(|ext| ext == "jsonl") {
            shards.push(p);
        }
    }
    shards.sort();
    Ok(shards)
}

pub fn write_corpus(path: &Path, records: &[TweetRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| Error::json(path, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Lowercased keyword list matched as plain substrings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: Vec<String>,
}

impl KeywordSet {
    pub fn new<I, S>(keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| k.as_ref().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        keywords.sort();
        keywords.dedup();
        Self { keywords }
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// True iff any keyword occurs in `text`, compared case-insensitively.
    pub fn matches(&self, text: &str) -> bool {
        if text.is_empty() {
            return false;
        }
        let lowered = text.to_lowercase();
        self.matches_lowered(&lowered)
    }

    fn matches_lowered(&self, lowered: &str) -> bool {
        self.keywords.iter().any(|k| lowered.contains(k.as_str()))
    }
}

pub fn match_keywords(text: &str, keywords: &KeywordSet) -> bool {
    keywords.matches(text)
}

/// One tracked sub-stream: a keyword list restricted to a set of languages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstreamConfig {
    pub stream_id: u32,
    pub keywords: Vec<String>,
    /// Empty means every language.
    #[serde(default)]
    pub languages: Vec<String>,
}

/// Validated sub-stream table with keywords lowercased.
#[derive(Debug, Clone)]
pub struct Substreams {
    streams: Vec<(SubstreamConfig, KeywordSet)>,
}

impl Substreams {
    pub fn new(configs: Vec<SubstreamConfig>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut streams = Vec::with_capacity(configs.len());
        for cfg in configs {
            if !ids.insert(cfg.stream_id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate stream_id {}",
                    cfg.stream_id
                )));
            }
            let set = KeywordSet::new(&cfg.keywords);
            if set.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "stream {} has no keywords",
                    cfg.stream_id
                )));
            }
            streams.push((cfg, set));
        }
        streams.sort_by_key(|(cfg, _)| cfg.stream_id);
        Ok(Self { streams })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let configs: Vec<SubstreamConfig> =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))?;
        Self::new(configs)
    }

    pub fn stream_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.streams.iter().map(|(cfg, _)| cfg.stream_id)
    }

    /// Union of every stream's keywords.
    pub fn all_keywords(&self) -> KeywordSet {
        KeywordSet::new(self.streams.iter().flat_map(|(_, k)| k.keywords()))
    }

    /// Streams whose keywords match the tweet text and whose language list
    /// admits the tweet language.
    pub fn assign(&self, tweet: &TweetRecord) -> BTreeSet<u32> {
        let lowered = tweet.text.to_lowercase();
        self.streams
            .iter()
            .filter(|(cfg, keywords)| {
                (cfg.languages.is_empty() || cfg.languages.iter().any(|l| *l == tweet.lang))
                    && keywords.matches_lowered(&lowered)
            })
            .map(|(cfg, _)| cfg.stream_id)
            .collect()
    }
}

pub fn assign_substreams(tweet: &TweetRecord, config: &Substreams) -> BTreeSet<u32> {
    config.assign(tweet)
}

/// Rate-limit bookkeeping for one sub-stream interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateLimitRecord {
    pub stream_id: u32,
    pub delivered_count: u64,
    pub skipped_count: u64,
}

pub fn load_rate_limits(path: &Path) -> Result<Vec<RateLimitRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: RateLimitRecord = serde_json::from_str(line).map_err(|e| {
            Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// delivered / (delivered + skipped), summed over the stream's records.
pub fn estimate_sampling_rate(records: &[RateLimitRecord], stream_id: u32) -> Result<f64> {
    let mut seen = false;
    let (mut delivered, mut skipped) = (0u128, 0u128);
    for r in records.iter().filter(|r| r.stream_id == stream_id) {
        seen = true;
        delivered += u128::from(r.delivered_count);
        skipped += u128::from(r.skipped_count);
    }
    if !seen {
        return Err(Error::UnknownStream(stream_id));
    }
    let total = delivered + skipped;
    if total == 0 {
        // Nothing delivered and nothing dropped: no evidence of loss.
        return Ok(1.0);
    }
    Ok(delivered as f64 / total as f64)
}

/// Set of tweet ids already emitted. Shards can build their own and merge.
#[derive(Debug, Clone, Default)]
pub struct Deduper {
    seen: HashSet<String>,
}

impl Deduper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true the first time an id is offered.
    pub fn insert(&mut self, tweet_id: &str) -> bool {
        if self.seen.contains(tweet_id) {
            false
        } else {
            self.seen.insert(tweet_id.to_owned())
        }
    }

    pub fn contains(&self, tweet_id: &str) -> bool {
        self.seen.contains(tweet_id)
    }

    pub fn merge(&mut self, other: Deduper) {
        self.seen.extend(other.seen);
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Drops repeated tweet ids, keeping the first occurrence.
pub fn dedup_in_order(records: Vec<TweetRecord>) -> Vec<TweetRecord> {
    let mut dedup = Deduper::new();
    records
        .into_iter()
        .filter(|r| dedup.insert(&r.tweet_id))
        .collect()
}

/// Unions timestamp-ordered sub-streams into one corpus.
///
/// Streams are merged by timestamp (ties go to the lower stream index, then
/// to stream order), and each tweet id is kept at its first occurrence in
/// that merge order.
pub fn union_dedup(streams: Vec<Vec<TweetRecord>>) -> Vec<TweetRecord> {
    let total: usize = streams.iter().map(Vec::len).sum();
    let mut iters: Vec<std::vec::IntoIter<TweetRecord>> =
        streams.into_iter().map(Vec::into_iter).collect();
    let mut heads: Vec<Option<TweetRecord>> = iters.iter_mut().map(Iterator::next).collect();
    let mut heap: BinaryHeap<Reverse<(i64, usize)>> = heads
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.as_ref().map(|r| Reverse((r.timestamp, i))))
        .collect();

    let mut dedup = Deduper::new();
    let mut out = Vec::with_capacity(total);
    while let Some(Reverse((_, i))) = heap.pop() {
        let record = heads[i].take().expect("heap entry has a head");
        if let Some(next) = iters[i].next() {
            heap.push(Reverse((next.timestamp, i)));
            heads[i] = Some(next);
        }
        if dedup.insert(&record.tweet_id) {
            out.push(record);
        }
    }
    out
}

/// Outcome of replaying the sub-stream partition over an archive.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReplayStats {
    pub input_records: usize,
    pub unmatched_records: usize,
    /// Per-stream record counts, keyed by stream id.
    pub stream_counts: BTreeMap<u32, usize>,
    pub union_records: usize,
}

/// Partitions records into sub-streams, orders each by timestamp and unions
/// them back together.
pub fn replay_substreams(
    records: Vec<TweetRecord>,
    config: &Substreams,
) -> (Vec<TweetRecord>, ReplayStats) {
    let mut stats = ReplayStats {
        input_records: records.len(),
        ..Default::default()
    };
    let ids: Vec<u32> = config.stream_ids().collect();
    let mut streams: Vec<Vec<TweetRecord>> = vec![Vec::new(); ids.len()];
    for record in records {
        let assigned = config.assign(&record);
        if assigned.is_empty() {
            stats.unmatched_records += 1;
            continue;
        }
        for id in &assigned {
            let slot = ids.iter().position(|x| x == id).expect("known stream id");
            streams[slot].push(record.clone());
        }
    }
    for (id, stream) in ids.iter().zip(streams.iter_mut()) {
        stream.sort_by_key(|r| r.timestamp);
        stats.stream_counts.insert(*id, stream.len());
    }
    let union = union_dedup(streams);
    stats.union_records = union.len();
    (union, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tweet(id: &str, ts: i64, lang: &str, text: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            user_id: format!("user_{id}"),
            timestamp: ts,
            lang: lang.into(),
            text: text.into(),
            hashtags: vec![],
            urls: vec![],
            place_country: None,
            retweeted_user_id: None,
            is_quote: false,
            profile_location: None,
        }
    }

    fn appendix_streams() -> Substreams {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/substreams.json");
        Substreams::load(&path).unwrap()
    }

    const LINE: &str = r#"{"id":"1","user_id":"a","created_at":1584000000,"lang":"en","text":"covid","hashtags":[],"urls":[],"place_country":null,"retweeted_user_id":null,"is_quote":false,"profile_location":null}"#;

    #[test]
    fn reads_valid_lines() {
        let data = format!("{LINE}\n{}\n{}\n", LINE.replace("\"1\"", "\"2\""), LINE.replace("\"1\"", "\"3\""));
        let mut reader = CorpusReader::new(data.as_bytes(), "mem", None);
        let records: Vec<_> = reader.by_ref().map(|r| r.unwrap()).collect();
        assert_eq!(records.len(), 3);
        assert_eq!(records[2].tweet_id, "3");
        assert_eq!(reader.skipped(), 0);
    }

    #[test]
    fn skips_malformed_lines() {
        let data = format!("{LINE}\n{{not json\n{}\n", LINE.replace("\"1\"", "\"2\""));
        let mut reader = CorpusReader::new(data.as_bytes(), "mem", None);
        let records: Vec<_> = reader.by_ref().map(|r| r.unwrap()).collect();
        assert_eq!(records.len(), 2);
        assert_eq!(reader.skipped(), 1);
    }

    #[test]
    fn limit_stops_early() {
        let data = format!("{LINE}\n{LINE}\n{LINE}\n");
        let reader = CorpusReader::new(data.as_bytes(), "mem", Some(2));
        assert_eq!(reader.count(), 2);
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            read_corpus("/nonexistent/corpus.jsonl", None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn keyword_examples() {
        let all = appendix_streams().all_keywords();
        assert_eq!(all.keywords().len(), 35);
        assert!(all.matches("Wear your N95 today"));
        assert!(all.matches("practice social distancing now"));
        assert!(!all.matches(""));
        assert!(!all.matches("hello world"));
    }

    #[test]
    fn substream_examples() {
        let cfg = appendix_streams();
        assert!(cfg.assign(&tweet("1", 0, "en", "The coronavirus spreads")).contains(&4));
        assert!(cfg.assign(&tweet("2", 0, "es", "el corona llega")).contains(&8));
        assert!(cfg.assign(&tweet("3", 0, "en", "hello world")).is_empty());
        // Uppercase keyword in the fixture is matched after lowercasing.
        assert!(cfg.assign(&tweet("4", 0, "en", "COVID—19 update")).contains(&6));
    }

    #[test]
    fn duplicate_stream_ids_rejected() {
        let cfg = vec![
            SubstreamConfig { stream_id: 1, keywords: vec!["a".into()], languages: vec![] },
            SubstreamConfig { stream_id: 1, keywords: vec!["b".into()], languages: vec![] },
        ];
        assert!(Substreams::new(cfg).is_err());
        let empty = vec![SubstreamConfig { stream_id: 1, keywords: vec![], languages: vec![] }];
        assert!(Substreams::new(empty).is_err());
    }

    #[test]
    fn sampling_rate_examples() {
        let r = |d, s| RateLimitRecord { stream_id: 1, delivered_count: d, skipped_count: s };
        assert_eq!(estimate_sampling_rate(&[r(95, 5)], 1).unwrap(), 0.95);
        assert_eq!(estimate_sampling_rate(&[r(40, 0)], 1).unwrap(), 1.0);
        // 980 delivered, 20 skipped across three intervals.
        let multi = [r(500, 10), r(300, 4), r(180, 6)];
        assert_eq!(estimate_sampling_rate(&multi, 1).unwrap(), 0.98);
        assert!(matches!(
            estimate_sampling_rate(&multi, 7),
            Err(Error::UnknownStream(7))
        ));
    }

    #[test]
    fn union_examples() {
        let a: Vec<_> = (0..3).map(|i| tweet(&format!("a{i}"), i, "en", "x")).collect();
        let b: Vec<_> = (0..4).map(|i| tweet(&format!("b{i}"), i, "en", "x")).collect();
        assert_eq!(union_dedup(vec![a.clone(), b]).len(), 7);
        assert_eq!(union_dedup(vec![a.clone(), a.clone()]), a);
    }

    #[test]
    fn union_with_planted_overlap() {
        // Two streams of 50; the last 10 of the first reappear in the second.
        let a: Vec<_> = (0..50).map(|i| tweet(&format!("t{i}"), i, "en", "x")).collect();
        let b: Vec<_> = (40..90).map(|i| tweet(&format!("t{i}"), i, "en", "x")).collect();
        let out = union_dedup(vec![a, b]);
        assert_eq!(out.len(), 90);
        assert!(out.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }

    #[test]
    fn first_occurrence_wins_within_file() {
        let mut first = tweet("x", 1, "en", "first");
        first.user_id = "u1".into();
        let mut second = tweet("x", 2, "en", "second");
        second.user_id = "u2".into();
        let out = dedup_in_order(vec![first.clone(), second]);
        assert_eq!(out, vec![first]);
    }

    #[test]
    fn deduper_merge() {
        let mut a = Deduper::new();
        a.insert("1");
        a.insert("2");
        let mut b = Deduper::new();
        b.insert("2");
        b.insert("3");
        a.merge(b);
        assert_eq!(a.len(), 3);
        assert!(!a.insert("3"));
    }
}
