//! Stage orchestration. Every stage reads its inputs from the config and
//! from upstream stage directories under `output_dir`, and writes plain
//! CSV/JSON artifacts plus a manifest into its own directory.

mod artifacts;
mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use artifacts::{require, sha256_file, stage_dir, StageManifest, ARTIFACT_VERSION, MANIFEST};
pub use config::{FixturePaths, PipelineConfig, ReportSettings, SpreadSettings};

use artifacts::{finish, read_json, reset_stage, write_json};

use crate::corpus::{load_corpus, replay_substreams, corpus_shards, estimate_sampling_rate, load_rate_limits, write_corpus, Substreams, TweetRecord};
use crate::error::{Error, Result};
use crate::geo::{
    country_index, geoparse_precision, geoparse_users, geotag_users, load_gazetteer,
    merge_locations, read_geo_users, write_geo_users,
};
use crate::graph::{build_network, extract_backbone, BackboneConfig, WeightedGraph};
use crate::leaning::{
    augment_with_bridges, bridging_users, compare_seedings, dual_predict, hashtag_scores,
    label_spread, load_seeds, normalize_adjacency, read_scores, seed_map, select_alpha,
    to_leaning_scores, user_tag_counts, write_scores, CountryModel, DualPrediction,
    HashtagLexicon, Label, LeaningScore, SeedOrigin, SpreadConfig,
};
use crate::media::{extract_user_urls, map_user_domains, Profiles, ShortenerMap, SuffixRules};
use crate::report::{
    country_profile, dual_summary, language_shares, leaning_distribution, load_external_scores,
    media_profile, reach_heatmap, top_domains, validate_against, CorpusSummary, CountryProfile,
    CountryRanking, GeoSummary, LanguageShares, MediaProfile, MediaSummary, NetworkSummary,
    ReportBundle, SeedingComparison, SkippedValidation, SpreadSummary, REPORT_FORMAT_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Geolocate,
    Graph,
    Spread,
    Bridge,
    Media,
    Report,
    All,
}

impl Stage {
    pub const PIPELINE: [Stage; 7] = [
        Stage::Ingest,
        Stage::Geolocate,
        Stage::Graph,
        Stage::Spread,
        Stage::Bridge,
        Stage::Media,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Geolocate => "geolocate",
            Stage::Graph => "graph",
            Stage::Spread => "spread",
            Stage::Bridge => "bridge",
            Stage::Media => "media",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }

    /// Stages whose artifacts this stage reads.
    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest | Stage::All => &[],
            Stage::Geolocate => &[Stage::Ingest],
            Stage::Graph => &[Stage::Ingest, Stage::Geolocate],
            Stage::Spread => &[Stage::Ingest, Stage::Geolocate, Stage::Graph],
            Stage::Bridge => &[Stage::Ingest, Stage::Geolocate, Stage::Graph, Stage::Spread],
            Stage::Media => &[Stage::Ingest, Stage::Spread],
            Stage::Report => &[
                Stage::Ingest,
                Stage::Geolocate,
                Stage::Graph,
                Stage::Spread,
                Stage::Bridge,
                Stage::Media,
            ],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::PIPELINE
            .iter()
            .chain(std::iter::once(&Stage::All))
            .find(|st| st.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Upper bound on threads for per-country work.
    pub workers: usize,
    /// Permit live resolution of general-purpose shorteners.
    pub allow_network: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            allow_network: false,
        }
    }
}

/// Runs one stage, or every stage in order for [`Stage::All`].
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, opts: &RunOptions) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    if stage == Stage::All {
        for s in Stage::PIPELINE {
            run_one(s, cfg, opts)?;
        }
        return Ok(());
    }
    run_one(stage, cfg, opts)
}

fn run_one(stage: Stage, cfg: &PipelineConfig, opts: &RunOptions) -> Result<()> {
    for up in stage.upstream() {
        require(&cfg.output_dir, *up)?;
    }
    log::info!("running stage {stage}");
    let dir = reset_stage(&cfg.output_dir, stage)?;
    let files = match stage {
        Stage::Ingest => ingest(cfg, &dir)?,
        Stage::Geolocate => geolocate(cfg, &dir)?,
        Stage::Graph => graph(cfg, opts, &dir)?,
        Stage::Spread => spread(cfg, opts, &dir)?,
        Stage::Bridge => bridge(cfg, opts, &dir)?,
        Stage::Media => media(cfg, opts, &dir)?,
        Stage::Report => report(cfg, &dir)?,
        Stage::All => unreachable!("expanded by run_stage"),
    };
    finish(&dir, stage, &files, stage.upstream())
}

/// Maps `f` over `items` on up to `workers` threads, keeping input order.
fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

// Artifact file names.
const CORPUS_FILE: &str = "corpus.jsonl";
const INGEST_SUMMARY: &str = "ingest.json";
const GEO_USERS: &str = "geo_users.csv";
const GEO_SUMMARY: &str = "geolocate.json";
const GRAPH_SUMMARY: &str = "graph.json";
const SCORES_FILE: &str = "scores.csv";
const HASHTAG_SCORES_FILE: &str = "hashtag_scores.csv";
const SPREAD_SUMMARY: &str = "spread.json";
const BRIDGE_PAIRS: &str = "pairs.csv";
const BRIDGE_SUMMARY: &str = "bridge.json";
const PROFILES_CSV: &str = "profiles.csv";
const SCORE_LISTS: &str = "score_lists.json";
const MEDIA_SUMMARY: &str = "media.json";

fn edges_file(country: &str) -> String {
    format!("{country}_edges.csv")
}

fn seeds_file(country: &str) -> String {
    format!("{country}_seeds.txt")
}

fn load_ingested(cfg: &PipelineConfig) -> Result<Vec<TweetRecord>> {
    let path = stage_dir(&cfg.output_dir, Stage::Ingest).join(CORPUS_FILE);
    Ok(load_corpus(&path)?.0)
}

fn load_geo(cfg: &PipelineConfig) -> Result<BTreeMap<String, String>> {
    let path = stage_dir(&cfg.output_dir, Stage::Geolocate).join(GEO_USERS);
    Ok(country_index(&read_geo_users(&path)?))
}

fn ingest(cfg: &PipelineConfig, dir: &Path) -> Result<Vec<String>> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for shard in corpus_shards(&cfg.corpus_path)? {
        let (r, s) = load_corpus(&shard)?;
        records.extend(r);
        skipped += s;
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} malformed corpus lines");
    }
    let raw = records.len();
    let substreams = Substreams::load(&cfg.fixtures.substreams)?;
    let (corpus, replay) = replay_substreams(records, &substreams);

    let rate_records = match &cfg.fixtures.rate_limits {
        Some(p) => Some(load_rate_limits(p)?),
        None => None,
    };
    let sampling_rates = substreams
        .stream_ids()
        .map(|id| {
            let rate = match &rate_records {
                None => Some(1.0),
                Some(r) => estimate_sampling_rate(r, id).ok(),
            };
            (id, rate)
        })
        .collect();

    let summary = CorpusSummary {
        raw_records: raw,
        skipped_lines: skipped,
        unmatched_records: replay.unmatched_records,
        duplicates_removed: raw - replay.unmatched_records - corpus.len(),
        records: corpus.len(),
        quote_tweets: corpus.iter().filter(|t| t.is_quote).count(),
        simple_retweets: corpus.iter().filter(|t| t.simple_retweet_of().is_some()).count(),
        stream_counts: replay.stream_counts.clone(),
        sampling_rates,
    };
    write_corpus(&dir.join(CORPUS_FILE), &corpus)?;
    write_json(&dir.join(INGEST_SUMMARY), &summary)?;
    Ok(vec![CORPUS_FILE.into(), INGEST_SUMMARY.into()])
}

fn geolocate(cfg: &PipelineConfig, dir: &Path) -> Result<Vec<String>> {
    let corpus = load_ingested(cfg)?;
    let (gazetteer, rows_skipped) = load_gazetteer(&cfg.fixtures.gazetteer)?;
    let tagged = geotag_users(&corpus);
    let any_tag: BTreeSet<&str> = corpus
        .iter()
        .filter(|t| t.place_country.as_deref().is_some_and(|c| !c.trim().is_empty()))
        .map(|t| t.user_id.as_str())
        .collect();
    let parsed = geoparse_users(&corpus, &gazetteer);
    let users = merge_locations(&tagged, &parsed);
    let mut per_country: BTreeMap<String, usize> = BTreeMap::new();
    for u in &users {
        *per_country.entry(u.country.clone()).or_default() += 1;
    }
    let summary = GeoSummary {
        geotagged: tagged.len(),
        geoparsed: parsed.len(),
        located: users.len(),
        multi_country_excluded: any_tag.len() - tagged.len(),
        gazetteer_rows_skipped: rows_skipped,
        geoparse_precision: geoparse_precision(&tagged, &parsed).ok(),
        users_per_country: per_country,
    };
    write_geo_users(&dir.join(GEO_USERS), &users)?;
    write_json(&dir.join(GEO_SUMMARY), &summary)?;
    Ok(vec![GEO_USERS.into(), GEO_SUMMARY.into()])
}

fn graph(cfg: &PipelineConfig, opts: &RunOptions, dir: &Path) -> Result<Vec<String>> {
    let corpus = load_ingested(cfg)?;
    let geo = load_geo(cfg)?;
    let backbone_cfg = BackboneConfig {
        significance_threshold: cfg.spread.significance_threshold,
        keep_seed_seed_edges: cfg.spread.keep_seed_seed_edges,
    };
    let results = par_map(&cfg.countries, opts.workers, |country| -> Result<(NetworkSummary, Option<WeightedGraph>)> {
        let load = load_seeds(&cfg.fixtures.seeds[country])?;
        let accepted = load.accepted(cfg.spread.seed_coverage_threshold);
        let mut summary = NetworkSummary {
            country: country.clone(),
            politicians: load.politicians,
            with_accounts: load.with_accounts,
            seed_coverage: load.coverage,
            accepted,
            nodes: 0,
            edges: 0,
            backbone_nodes: 0,
            backbone_edges: 0,
            seeds_left: 0,
            seeds_right: 0,
        };
        if !accepted {
            log::warn!("{country}: seed coverage {:.3} below threshold, skipping", load.coverage);
            return Ok((summary, None));
        }
        let mut network = build_network(&corpus, &geo, country);
        network.set_seeds(load.seeds.iter().map(|s| s.user_id.as_str()));
        let backbone = extract_backbone(&network, &backbone_cfg)?;
        let labels = seed_map(&load.seeds);
        summary.nodes = network.node_count();
        summary.edges = network.edge_count();
        summary.backbone_nodes = backbone.node_count();
        summary.backbone_edges = backbone.edge_count();
        for s in backbone.seeds() {
            match labels.get(s) {
                Some(Label::Left) => summary.seeds_left += 1,
                Some(Label::Right) => summary.seeds_right += 1,
                None => {}
            }
        }
        Ok((summary, Some(backbone)))
    });

    let mut files = vec![GRAPH_SUMMARY.to_string()];
    let mut summaries = Vec::new();
    for r in results {
        let (summary, backbone) = r?;
        if let Some(g) = backbone {
            let (e, s) = (edges_file(&summary.country), seeds_file(&summary.country));
            g.write_csv(&dir.join(&e), &dir.join(&s))?;
            files.push(e);
            files.push(s);
        }
        summaries.push(summary);
    }
    write_json(&dir.join(GRAPH_SUMMARY), &summaries)?;
    Ok(files)
}

fn load_graph_summary(cfg: &PipelineConfig) -> Result<Vec<NetworkSummary>> {
    read_json(&stage_dir(&cfg.output_dir, Stage::Graph).join(GRAPH_SUMMARY))
}

fn accepted_countries(cfg: &PipelineConfig) -> Result<Vec<String>> {
    let summaries = load_graph_summary(cfg)?;
    Ok(cfg
        .countries
        .iter()
        .filter(|c| summaries.iter().any(|s| &s.country == *c && s.accepted))
        .cloned()
        .collect())
}

fn load_backbone(cfg: &PipelineConfig, country: &str) -> Result<WeightedGraph> {
    let dir = stage_dir(&cfg.output_dir, Stage::Graph);
    let edges = dir.join(edges_file(country));
    if !edges.is_file() {
        return Err(Error::MissingArtifact(edges));
    }
    WeightedGraph::read_csv(&edges, &dir.join(seeds_file(country)))
}

fn politician_seeds(cfg: &PipelineConfig, country: &str) -> Result<BTreeMap<String, Label>> {
    Ok(seed_map(&load_seeds(&cfg.fixtures.seeds[country])?.seeds))
}

fn spread_config(cfg: &PipelineConfig, alpha: f64) -> SpreadConfig {
    SpreadConfig {
        alpha,
        tolerance: cfg.spread.tolerance,
        max_iterations: cfg.spread.max_iterations,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpreadStageSummary {
    countries: Vec<SpreadSummary>,
    seeding_comparison: Option<SeedingComparison>,
}

struct CountrySpread {
    summary: SpreadSummary,
    scores: Vec<LeaningScore>,
    hashtag: Option<(SeedingComparison, Vec<LeaningScore>)>,
}

fn spread(cfg: &PipelineConfig, opts: &RunOptions, dir: &Path) -> Result<Vec<String>> {
    let countries = accepted_countries(cfg)?;
    let needs_corpus = cfg.hashtag_country.as_ref().is_some_and(|h| countries.contains(h));
    let (corpus, geo) = if needs_corpus {
        (load_ingested(cfg)?, load_geo(cfg)?)
    } else {
        (Vec::new(), BTreeMap::new())
    };
    let results = par_map(&countries, opts.workers, |country| -> Result<CountrySpread> {
        let backbone = load_backbone(cfg, country)?;
        let seeds: BTreeMap<String, Label> = politician_seeds(cfg, country)?
            .into_iter()
            .filter(|(u, _)| backbone.contains_node(u))
            .collect();
        let op = normalize_adjacency(&backbone)?;
        let base = spread_config(cfg, cfg.spread.alpha.unwrap_or(0.5));
        let (alpha, cv_accuracy, grid) = match cfg.spread.alpha {
            Some(a) => (a, None, Vec::new()),
            None => {
                let sel = select_alpha(&op, &seeds, cfg.spread.folds, &cfg.spread.alpha_grid, &base, cfg.rng_seed)?;
                (sel.alpha, Some(sel.cv_accuracy), sel.grid)
            }
        };
        let run_cfg = spread_config(cfg, alpha);
        let result = label_spread(&op, &seeds, &run_cfg)?;
        let scores = result.leaning_scores();
        log::info!("{country}: alpha {alpha}, {} users scored", scores.len());

        let hashtag = if cfg.hashtag_country.as_deref() == Some(country.as_str()) {
            let lex = HashtagLexicon::load(&cfg.fixtures.hashtags_left, &cfg.fixtures.hashtags_right)?;
            let located = corpus.iter().filter(|t| geo.get(&t.user_id) == Some(country));
            let counts = user_tag_counts(located, &lex);
            let tag_seeds: BTreeMap<String, Label> = hashtag_scores(&counts, cfg.spread.hashtag_threshold)
                .into_iter()
                .filter(|s| backbone.contains_node(&s.user_id))
                .map(|s| (s.user_id, s.label))
                .collect();
            let tag_scores = label_spread(&op, &tag_seeds, &run_cfg)?.leaning_scores();
            let (common, agreement) = compare_seedings(&scores, &tag_scores)?;
            let cmp = SeedingComparison {
                country: country.clone(),
                hashtag_seeds_left: tag_seeds.values().filter(|l| **l == Label::Left).count(),
                hashtag_seeds_right: tag_seeds.values().filter(|l| **l == Label::Right).count(),
                common_users: common,
                agreement,
            };
            Some((cmp, to_leaning_scores(&tag_scores, &tag_seeds, country, SeedOrigin::Hashtag)))
        } else {
            None
        };

        Ok(CountrySpread {
            summary: SpreadSummary {
                country: country.clone(),
                alpha,
                cv_accuracy,
                alpha_grid: grid,
                iterations: result.iterations,
                residual: result.residual,
                scored_users: scores.len(),
            },
            scores: to_leaning_scores(&scores, &seeds, country, SeedOrigin::Politician),
            hashtag,
        })
    });

    let mut summaries = Vec::new();
    let mut all_scores = Vec::new();
    let mut comparison = None;
    let mut tag_scores = Vec::new();
    for r in results {
        let r = r?;
        summaries.push(r.summary);
        all_scores.extend(r.scores);
        if let Some((cmp, s)) = r.hashtag {
            comparison = Some(cmp);
            tag_scores = s;
        }
    }
    write_scores(&dir.join(SCORES_FILE), &all_scores)?;
    let mut files = vec![SCORES_FILE.to_string(), SPREAD_SUMMARY.to_string()];
    if comparison.is_some() {
        write_scores(&dir.join(HASHTAG_SCORES_FILE), &tag_scores)?;
        files.push(HASHTAG_SCORES_FILE.into());
    }
    write_json(
        &dir.join(SPREAD_SUMMARY),
        &SpreadStageSummary {
            countries: summaries,
            seeding_comparison: comparison,
        },
    )?;
    Ok(files)
}

fn load_spread_summary(cfg: &PipelineConfig) -> Result<SpreadStageSummary> {
    read_json(&stage_dir(&cfg.output_dir, Stage::Spread).join(SPREAD_SUMMARY))
}

fn load_politician_scores(cfg: &PipelineConfig) -> Result<Vec<LeaningScore>> {
    read_scores(&stage_dir(&cfg.output_dir, Stage::Spread).join(SCORES_FILE))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BridgeRecord {
    country_a: String,
    country_b: String,
    bridging_users: usize,
    dropped: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairRow {
    country_a: String,
    country_b: String,
    user_id: String,
    score_a: f64,
    score_b: f64,
}

fn bridge(cfg: &PipelineConfig, opts: &RunOptions, dir: &Path) -> Result<Vec<String>> {
    let countries = accepted_countries(cfg)?;
    let spread = load_spread_summary(cfg)?;
    let alpha: BTreeMap<&str, f64> = spread
        .countries
        .iter()
        .map(|s| (s.country.as_str(), s.alpha))
        .collect();
    let pairs: Vec<(String, String)> = cfg
        .bridge_pairs()
        .into_iter()
        .filter(|(a, b)| countries.contains(a) && countries.contains(b))
        .collect();
    let mut backbones = BTreeMap::new();
    let mut seeds = BTreeMap::new();
    if !pairs.is_empty() {
        for c in &countries {
            backbones.insert(c.clone(), load_backbone(cfg, c)?);
            seeds.insert(c.clone(), politician_seeds(cfg, c)?);
        }
    }
    let (corpus, geo) = if pairs.is_empty() {
        (Vec::new(), BTreeMap::new())
    } else {
        (load_ingested(cfg)?, load_geo(cfg)?)
    };

    let results = par_map(&pairs, opts.workers, |(a, b)| -> Result<DualPrediction> {
        let bridge = bridging_users(&geo, &corpus, a, b);
        let model = |c: &String| CountryModel {
            country: c.clone(),
            graph: augment_with_bridges(&backbones[c], &corpus, &geo, &bridge, c),
            seeds: seeds[c].clone(),
            spread: spread_config(cfg, alpha[c.as_str()]),
        };
        dual_predict(&bridge, &model(a), &model(b))
    });

    let mut records = Vec::new();
    let path = dir.join(BRIDGE_PAIRS);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    if pairs.is_empty() {
        w.write_record(["country_a", "country_b", "user_id", "score_a", "score_b"])
            .map_err(|e| Error::csv(&path, e))?;
    }
    for ((a, b), r) in pairs.iter().zip(results) {
        let pred = r?;
        for (u, (sa, sb)) in &pred.pairs {
            w.serialize(PairRow {
                country_a: a.clone(),
                country_b: b.clone(),
                user_id: u.clone(),
                score_a: *sa,
                score_b: *sb,
            })
            .map_err(|e| Error::csv(&path, e))?;
        }
        records.push(BridgeRecord {
            country_a: a.clone(),
            country_b: b.clone(),
            bridging_users: pred.pairs.len() + pred.dropped,
            dropped: pred.dropped,
        });
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&dir.join(BRIDGE_SUMMARY), &records)?;
    Ok(vec![BRIDGE_PAIRS.into(), BRIDGE_SUMMARY.into()])
}

fn load_bridges(cfg: &PipelineConfig) -> Result<Vec<(String, String, DualPrediction)>> {
    let dir = stage_dir(&cfg.output_dir, Stage::Bridge);
    let records: Vec<BridgeRecord> = read_json(&dir.join(BRIDGE_SUMMARY))?;
    let path = dir.join(BRIDGE_PAIRS);
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    let mut by_pair: BTreeMap<(String, String), DualPrediction> = BTreeMap::new();
    for row in rdr.deserialize::<PairRow>() {
        let row = row.map_err(|e| Error::csv(&path, e))?;
        by_pair
            .entry((row.country_a, row.country_b))
            .or_default()
            .pairs
            .insert(row.user_id, (row.score_a, row.score_b));
    }
    Ok(records
        .into_iter()
        .map(|r| {
            let mut pred = by_pair
                .remove(&(r.country_a.clone(), r.country_b.clone()))
                .unwrap_or_default();
            pred.dropped = r.dropped;
            (r.country_a, r.country_b, pred)
        })
        .collect())
}

fn media(cfg: &PipelineConfig, opts: &RunOptions, dir: &Path) -> Result<Vec<String>> {
    let corpus = load_ingested(cfg)?;
    let scores: BTreeMap<String, (String, f64)> = load_politician_scores(cfg)?
        .into_iter()
        .map(|s| (s.user_id, (s.country, s.score)))
        .collect();
    let scored: BTreeSet<String> = scores.keys().cloned().collect();
    let shorteners = ShortenerMap::load(&cfg.fixtures.shorteners, cfg.fixtures.resolved_cache.as_deref())?;
    let rules = SuffixRules::load(&cfg.fixtures.suffix_rules)?;
    let pairs = extract_user_urls(&corpus, &scored);
    let allow_network = cfg.allow_network || opts.allow_network;
    let (user_domains, stats) = map_user_domains(&pairs, &shorteners, &rules, allow_network);
    let profiles = Profiles::build(&user_domains, &scores);
    profiles.write_csv(&dir.join(PROFILES_CSV))?;
    profiles.write_score_lists(&dir.join(SCORE_LISTS))?;
    let summary = MediaSummary {
        stats,
        resolution_rate: stats.resolution_rate(),
        domains: profiles.len(),
        sharers: user_domains.len(),
    };
    write_json(&dir.join(MEDIA_SUMMARY), &summary)?;
    Ok(vec![PROFILES_CSV.into(), SCORE_LISTS.into(), MEDIA_SUMMARY.into()])
}

/// Loads the upstream artifacts and assembles the report bundle.
pub fn build_report(cfg: &PipelineConfig) -> Result<ReportBundle> {
    let out = &cfg.output_dir;
    let corpus_summary: CorpusSummary = read_json(&stage_dir(out, Stage::Ingest).join(INGEST_SUMMARY))?;
    let geo_summary: GeoSummary = read_json(&stage_dir(out, Stage::Geolocate).join(GEO_SUMMARY))?;
    let networks = load_graph_summary(cfg)?;
    let spread = load_spread_summary(cfg)?;
    let scores = load_politician_scores(cfg)?;
    let corpus = load_ingested(cfg)?;
    let geo = load_geo(cfg)?;
    let media_summary: MediaSummary = read_json(&stage_dir(out, Stage::Media).join(MEDIA_SUMMARY))?;
    let profiles = Profiles::read_score_lists(&stage_dir(out, Stage::Media).join(SCORE_LISTS))?;
    let rs = &cfg.report;

    let mut by_country: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for s in &scores {
        by_country.entry(s.country.as_str()).or_default().push(s.score);
    }
    let scored_countries: Vec<String> = cfg
        .countries
        .iter()
        .filter(|c| by_country.contains_key(c.as_str()))
        .cloned()
        .collect();
    let distributions = scored_countries
        .iter()
        .map(|c| leaning_distribution(&by_country[c.as_str()], c))
        .collect::<Result<Vec<_>>>()?;
    let languages = cfg
        .countries
        .iter()
        .map(|c| LanguageShares {
            country: c.clone(),
            shares: language_shares(&corpus, &geo, c, rs.language_top_k),
        })
        .collect();
    let bridges = load_bridges(cfg)?
        .iter()
        .map(|(a, b, pred)| dual_summary(a, b, pred))
        .collect();

    let global_top = top_domains(&profiles, None, rs.top_k);
    let by_country_top = scored_countries
        .iter()
        .map(|c| CountryRanking {
            country: c.clone(),
            domains: top_domains(&profiles, Some(c), rs.top_k),
        })
        .collect();
    let country_profiles = scored_countries
        .iter()
        .map(|c| CountryProfile {
            country: c.clone(),
            rows: country_profile(&profiles, c, rs.ridge_k, rs.exploratory_min_reach),
        })
        .collect();
    let media_profiles = global_top
        .iter()
        .take(rs.media_profiles)
        .map(|r| {
            Ok(MediaProfile {
                domain: r.domain.clone(),
                rows: media_profile(&profiles, &r.domain, &cfg.countries)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let heat_domains: Vec<String> = global_top
        .iter()
        .take(rs.heatmap_domains)
        .map(|r| r.domain.clone())
        .collect();
    let totals: BTreeMap<String, usize> = by_country
        .iter()
        .map(|(c, s)| (c.to_string(), s.len()))
        .collect();
    let heatmap = reach_heatmap(&profiles, &heat_domains, &scored_countries, &totals);

    let mut validations = Vec::new();
    let mut skipped = Vec::new();
    if !cfg.fixtures.external_scores.is_empty() {
        let rules = SuffixRules::load(&cfg.fixtures.suffix_rules)?;
        let country = cfg.validation_country();
        for path in &cfg.fixtures.external_scores {
            for ext in load_external_scores(path, &rules)? {
                match validate_against(&profiles, &ext, country, rs.min_reach) {
                    Ok(r) => validations.push(r),
                    Err(e) => {
                        log::warn!("skipping validation against {}: {e}", ext.source_name);
                        skipped.push(SkippedValidation {
                            source_name: ext.source_name.clone(),
                            reason: e.to_string(),
                        });
                    }
                }
            }
        }
    }

    Ok(ReportBundle {
        format_version: REPORT_FORMAT_VERSION,
        countries: cfg.countries.clone(),
        corpus: corpus_summary,
        geolocation: geo_summary,
        networks,
        spreading: spread.countries,
        distributions,
        languages,
        seeding_comparison: spread.seeding_comparison,
        bridges,
        media: media_summary,
        top_domains: global_top,
        top_domains_by_country: by_country_top,
        country_profiles,
        media_profiles,
        heatmap,
        validations,
        validations_skipped: skipped,
    })
}

fn report(cfg: &PipelineConfig, dir: &Path) -> Result<Vec<String>> {
    let bundle = build_report(cfg)?;
    bundle.write(dir)?;
    Ok([
        "report.json",
        "distributions.csv",
        "top_domains.csv",
        "validations.csv",
        "heatmap.csv",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect())
}

/// Path of the report JSON under an output directory.
pub fn report_path(output_dir: &Path) -> PathBuf {
    stage_dir(output_dir, Stage::Report).join("report.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::PIPELINE.iter().chain([Stage::All].iter()) {
            assert_eq!(s.name().parse::<Stage>().unwrap(), *s);
        }
        assert!("nope".parse::<Stage>().is_err());
    }

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        for workers in [1, 2, 8] {
            assert_eq!(par_map(&items, workers, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
        }
        assert!(par_map(&Vec::<usize>::new(), 4, |x| *x).is_empty());
    }

    #[test]
    fn upstream_is_earlier() {
        for s in Stage::PIPELINE {
            assert!(s.upstream().iter().all(|u| *u < s));
        }
    }
}
