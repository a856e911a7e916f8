use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaning::{default_alpha_grid, CV_SHUFFLE_SEED};

/// Input files. Relative paths are resolved against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixturePaths {
    pub gazetteer: PathBuf,
    pub substreams: PathBuf,
    #[serde(default)]
    pub rate_limits: Option<PathBuf>,
    pub hashtags_left: PathBuf,
    pub hashtags_right: PathBuf,
    /// Politician list per country code.
    pub seeds: BTreeMap<String, PathBuf>,
    pub shorteners: PathBuf,
    #[serde(default)]
    pub resolved_cache: Option<PathBuf>,
    pub suffix_rules: PathBuf,
    #[serde(default)]
    pub external_scores: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpreadSettings {
    /// Fixed alpha; when absent alpha is chosen by cross-validation.
    pub alpha: Option<f64>,
    pub alpha_grid: Vec<f64>,
    pub folds: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub significance_threshold: f64,
    pub keep_seed_seed_edges: bool,
    pub seed_coverage_threshold: f64,
    pub hashtag_threshold: f64,
}

impl Default for SpreadSettings {
    fn default() -> Self {
        Self {
            alpha: None,
            alpha_grid: default_alpha_grid(),
            folds: 10,
            tolerance: 1e-10,
            max_iterations: 1000,
            significance_threshold: 0.05,
            keep_seed_seed_edges: true,
            seed_coverage_threshold: 0.4,
            hashtag_threshold: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    /// Reach floor for validation against external scores.
    pub min_reach: usize,
    /// Reach floor for rankings and profiles.
    pub exploratory_min_reach: usize,
    pub top_k: usize,
    pub ridge_k: usize,
    pub heatmap_domains: usize,
    pub media_profiles: usize,
    pub language_top_k: usize,
    /// Country whose audience means are validated; defaults to the first.
    pub validation_country: Option<String>,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            min_reach: 50,
            exploratory_min_reach: 1,
            top_k: 50,
            ridge_k: 15,
            heatmap_domains: 20,
            media_profiles: 10,
            language_top_k: 2,
            validation_country: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// A JSON-lines file or a directory of `*.jsonl` shards.
    pub corpus_path: PathBuf,
    pub output_dir: PathBuf,
    /// Processing and reporting order.
    pub countries: Vec<String>,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    /// Country whose users are re-scored from hashtag-derived seeds.
    #[serde(default)]
    pub hashtag_country: Option<String>,
    /// Ordered country pairs for bridging-user analysis; all ordered pairs
    /// when absent.
    #[serde(default)]
    pub bridge_pairs: Option<Vec<(String, String)>>,
    #[serde(default)]
    pub allow_network: bool,
    pub fixtures: FixturePaths,
    #[serde(default)]
    pub spread: SpreadSettings,
    #[serde(default)]
    pub report: ReportSettings,
}

fn default_seed() -> u64 {
    CV_SHUFFLE_SEED
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl PipelineConfig {
    /// Parses TOML, or JSON when the file ends in `.json`, and resolves
    /// relative paths against the file's directory. Does not validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_path);
        fix(&mut self.output_dir);
        let f = &mut self.fixtures;
        fix(&mut f.gazetteer);
        fix(&mut f.substreams);
        fix(&mut f.hashtags_left);
        fix(&mut f.hashtags_right);
        fix(&mut f.shorteners);
        fix(&mut f.suffix_rules);
        f.rate_limits.iter_mut().for_each(fix);
        f.resolved_cache.iter_mut().for_each(fix);
        f.seeds.values_mut().for_each(fix);
        f.external_scores.iter_mut().for_each(fix);
    }

    /// Checks paths, country codes and numeric settings.
    pub fn validate(&self) -> Result<()> {
        if self.countries.is_empty() {
            return Err(config_err("countries must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.countries {
            if c.len() != 2 || !c.chars().all(|ch| ch.is_ascii_uppercase()) {
                return Err(config_err(format!("country {c:?} is not an upper-case two-letter code")));
            }
            if !seen.insert(c) {
                return Err(config_err(format!("country {c} listed twice")));
            }
            if !self.fixtures.seeds.contains_key(c) {
                return Err(config_err(format!("no seed file for country {c}")));
            }
        }
        if let Some(h) = &self.hashtag_country {
            if !seen.contains(h) {
                return Err(config_err(format!("hashtag_country {h} is not in countries")));
            }
        }
        if let Some(v) = &self.report.validation_country {
            if !seen.contains(v) {
                return Err(config_err(format!("validation_country {v} is not in countries")));
            }
        }
        for (a, b) in self.bridge_pairs.iter().flatten() {
            if a == b || !seen.contains(a) || !seen.contains(b) {
                return Err(config_err(format!("bad bridge pair ({a}, {b})")));
            }
        }

        let f = &self.fixtures;
        let mut paths: Vec<&Path> = vec![
            &self.corpus_path,
            &f.gazetteer,
            &f.substreams,
            &f.hashtags_left,
            &f.hashtags_right,
            &f.shorteners,
            &f.suffix_rules,
        ];
        paths.extend(f.rate_limits.as_deref());
        paths.extend(f.resolved_cache.as_deref());
        paths.extend(self.countries.iter().map(|c| f.seeds[c].as_path()));
        paths.extend(f.external_scores.iter().map(PathBuf::as_path));
        for p in paths {
            if !p.exists() {
                return Err(config_err(format!("path does not exist: {}", p.display())));
            }
        }

        let s = &self.spread;
        let unit_open = |v: f64| v > 0.0 && v < 1.0;
        if let Some(a) = s.alpha {
            if !unit_open(a) {
                return Err(config_err(format!("spread.alpha {a} not in (0, 1)")));
            }
        }
        if s.alpha_grid.is_empty() || !s.alpha_grid.iter().all(|a| unit_open(*a)) {
            return Err(config_err("spread.alpha_grid must be non-empty with values in (0, 1)"));
        }
        if s.folds < 2 {
            return Err(config_err("spread.folds must be at least 2"));
        }
        if !(s.tolerance > 0.0) || s.max_iterations == 0 {
            return Err(config_err("spread.tolerance and spread.max_iterations must be positive"));
        }
        if !unit_open(s.significance_threshold) {
            return Err(config_err("spread.significance_threshold must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&s.seed_coverage_threshold) {
            return Err(config_err("spread.seed_coverage_threshold must be in [0, 1]"));
        }
        if !(0.0..1.0).contains(&s.hashtag_threshold) {
            return Err(config_err("spread.hashtag_threshold must be in [0, 1)"));
        }
        if self.report.min_reach == 0 || self.report.exploratory_min_reach == 0 {
            return Err(config_err("report reach floors must be at least 1"));
        }
        Ok(())
    }

    /// Restricts processing to one configured country.
    pub fn restrict_to(&mut self, country: &str) -> Result<()> {
        if !self.countries.iter().any(|c| c == country) {
            return Err(config_err(format!("country {country} is not configured")));
        }
        self.countries = vec![country.to_owned()];
        if self.hashtag_country.as_deref() != Some(country) {
            self.hashtag_country = None;
        }
        if self.report.validation_country.as_deref() != Some(country) {
            self.report.validation_country = None;
        }
        self.bridge_pairs = Some(Vec::new());
        Ok(())
    }

    pub fn bridge_pairs(&self) -> Vec<(String, String)> {
        match &self.bridge_pairs {
            Some(p) => p.clone(),
            None => {
                let cs = &self.countries;
                cs.iter()
                    .flat_map(|a| cs.iter().filter(move |b| *b != a).map(move |b| (a.clone(), b.clone())))
                    .collect()
            }
        }
    }

    pub fn validation_country(&self) -> &str {
        self.report
            .validation_country
            .as_deref()
            .unwrap_or(&self.countries[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
corpus_path = "corpus.jsonl"
output_dir = "out"
countries = ["US", "GB"]

[fixtures]
gazetteer = "g.csv"
substreams = "s.json"
hashtags_left = "l.txt"
hashtags_right = "r.txt"
shorteners = "sh.csv"
suffix_rules = "psl.dat"
seeds = { US = "seeds_US.csv", GB = "seeds_GB.csv" }
"#;

    fn setup() -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        for f in ["corpus.jsonl", "g.csv", "s.json", "l.txt", "r.txt", "sh.csv", "psl.dat", "seeds_US.csv", "seeds_GB.csv"] {
            std::fs::write(dir.path().join(f), "").unwrap();
        }
        let cfg = dir.path().join("config.toml");
        std::fs::write(&cfg, MINIMAL).unwrap();
        (dir, cfg)
    }

    #[test]
    fn defaults_and_relative_paths() {
        let (dir, path) = setup();
        let cfg = PipelineConfig::load(&path).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.corpus_path, dir.path().join("corpus.jsonl"));
        assert_eq!(cfg.rng_seed, CV_SHUFFLE_SEED);
        assert_eq!(cfg.spread.folds, 10);
        assert_eq!(cfg.report.min_reach, 50);
        assert_eq!(
            cfg.bridge_pairs(),
            vec![("US".to_string(), "GB".to_string()), ("GB".to_string(), "US".to_string())]
        );
        assert_eq!(cfg.validation_country(), "US");
    }

    #[test]
    fn missing_path_fails_validation() {
        let (dir, path) = setup();
        std::fs::remove_file(dir.path().join("g.csv")).unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn bad_values_fail_validation() {
        let (_dir, path) = setup();
        let base = PipelineConfig::load(&path).unwrap();
        let mut c = base.clone();
        c.countries.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.countries.push("FR".into());
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.spread.alpha = Some(1.0);
        assert!(c.validate().is_err());
        let mut c = base;
        c.hashtag_country = Some("CA".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let (dir, _) = setup();
        let p = dir.path().join("bad.toml");
        std::fs::write(&p, format!("{MINIMAL}\nbogus = 1\n")).unwrap();
        // `bogus` lands in the [fixtures] table.
        assert!(matches!(PipelineConfig::load(&p), Err(Error::Config(_))));
    }

    #[test]
    fn restrict_to_country() {
        let (_dir, path) = setup();
        let mut cfg = PipelineConfig::load(&path).unwrap();
        cfg.restrict_to("GB").unwrap();
        assert_eq!(cfg.countries, ["GB"]);
        assert!(cfg.bridge_pairs().is_empty());
        assert!(cfg.restrict_to("FR").is_err());
    }
}
