//! C ABI for medialean.
//!
//! Every fallible function returns an [`MlStatus`]; on failure the message
//! is kept per thread and can be fetched with [`ml_last_error_message`].
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Strings returned to the caller are
//! released with [`ml_string_free`].
//!
//! Panics never unwind into C: they are caught and reported as
//! [`MlStatus::Panic`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use medialean::geo::{load_gazetteer, Gazetteer};
use medialean::graph::{disparity_pvalue, extract_backbone, BackboneConfig, WeightedGraph};
use medialean::leaning::{label_spread, normalize_adjacency, Label, SpreadConfig};
use medialean::media::{extract_domain, SuffixRules};
use medialean::pipeline::{run_stage, PipelineConfig, RunOptions, Stage};
use medialean::report::{pearson, spearman};
use medialean::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Parse = 5,
    OutOfDomain = 6,
    Degenerate = 7,
    NonConvergence = 8,
    NoOverlap = 9,
    UnknownDomain = 10,
    Config = 11,
    MissingArtifact = 12,
    Panic = 99,
}

/// Seed side passed to [`ml_label_spread`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlLabel {
    Left = -1,
    Right = 1,
}

/// Undirected weighted retweet graph with a seed set.
pub struct MlGraph {
    inner: WeightedGraph,
}

/// Leaning scores of the users reached by label spreading.
pub struct MlScores {
    users: Vec<CString>,
    scores: Vec<f64>,
    index: BTreeMap<String, usize>,
    iterations: usize,
}

/// Public-suffix rule set.
pub struct MlSuffixRules {
    inner: SuffixRules,
}

/// Location-string gazetteer.
pub struct MlGazetteer {
    inner: Gazetteer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: MlStatus,
    message: String,
}

impl Failure {
    fn new(status: MlStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => MlStatus::Io,
            Error::Csv { source, .. } if source.is_io_error() => MlStatus::Io,
            Error::Csv { .. } | Error::Json { .. } | Error::Url { .. } => MlStatus::Parse,
            Error::InvalidInput(_) | Error::UnknownStream(_) => MlStatus::InvalidInput,
            Error::Domain { .. } => MlStatus::OutOfDomain,
            Error::Degenerate(_) => MlStatus::Degenerate,
            Error::NonConvergence { .. } => MlStatus::NonConvergence,
            Error::NoOverlap => MlStatus::NoOverlap,
            Error::UnknownDomain(_) => MlStatus::UnknownDomain,
            Error::Config(_) => MlStatus::Config,
            Error::MissingArtifact(_) => MlStatus::MissingArtifact,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard<F>(f: F) -> MlStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_last_error(&format!("panic: {msg}"));
            MlStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(MlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(MlStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: &str) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(MlStatus::InvalidInput, "string contains a NUL byte"))
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the calling thread's last error message, or NULL when the last
/// call succeeded. Release with [`ml_string_free`].
#[no_mangle]
pub extern "C" fn ml_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |c| c.clone().into_raw())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Disparity-filter p-value `(1 - p)^(k - 1)` of an edge with strength
/// share `p` at an endpoint of degree `k`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_disparity_pvalue(p: f64, k: usize, out: *mut f64) -> MlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = disparity_pvalue(p, k)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn ml_graph_new() -> *mut MlGraph {
    Box::into_raw(Box::new(MlGraph {
        inner: WeightedGraph::new(),
    }))
}

/// # Safety
/// `g` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_graph_free(g: *mut MlGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Adds `weight` retweets between `u` and `v`. Self-loops and zero weights
/// are ignored.
///
/// # Safety
/// `g` must be a live graph handle; `u` and `v` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ml_graph_add_edge(
    g: *mut MlGraph,
    u: *const c_char,
    v: *const c_char,
    weight: u64,
) -> MlStatus {
    guard(|| {
        let g = out_arg(g, "graph")?;
        let (u, v) = (str_arg(u, "u")?, str_arg(v, "v")?);
        g.inner.add_edge(u, v, weight);
        Ok(())
    })
}

/// Marks an existing node as a seed; unknown users are an error.
///
/// # Safety
/// `g` must be a live graph handle; `user` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ml_graph_add_seed(g: *mut MlGraph, user: *const c_char) -> MlStatus {
    guard(|| {
        let g = out_arg(g, "graph")?;
        let user = str_arg(user, "user")?;
        if !g.inner.contains_node(user) {
            return Err(Failure::new(MlStatus::InvalidInput, format!("unknown node {user:?}")));
        }
        g.inner.add_seed(user);
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ml_graph_node_count(g: *const MlGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.node_count())
}

/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ml_graph_edge_count(g: *const MlGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Disparity-filter backbone of `g` as a new graph.
///
/// # Safety
/// `g` must be a live graph handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_graph_backbone(
    g: *const MlGraph,
    significance: f64,
    keep_seed_seed_edges: bool,
    out: *mut *mut MlGraph,
) -> MlStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let out = out_arg(out, "out")?;
        let cfg = BackboneConfig {
            significance_threshold: significance,
            keep_seed_seed_edges,
        };
        let inner = extract_backbone(&g.inner, &cfg)?;
        *out = Box::into_raw(Box::new(MlGraph { inner }));
        Ok(())
    })
}

/// Label spreading over `g` from `n_seeds` labelled users.
///
/// # Safety
/// `g` must be a live graph handle; `seed_users` and `seed_labels` arrays of
/// `n_seeds` elements; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_label_spread(
    g: *const MlGraph,
    seed_users: *const *const c_char,
    seed_labels: *const MlLabel,
    n_seeds: usize,
    alpha: f64,
    tolerance: f64,
    max_iterations: usize,
    out: *mut *mut MlScores,
) -> MlStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let out = out_arg(out, "out")?;
        if n_seeds > 0 && (seed_users.is_null() || seed_labels.is_null()) {
            return Err(null("seed arrays"));
        }
        let mut seeds = BTreeMap::new();
        for i in 0..n_seeds {
            let user = str_arg(*seed_users.add(i), "seed user")?;
            let label = match *seed_labels.add(i).cast::<i32>() {
                -1 => Label::Left,
                1 => Label::Right,
                other => {
                    return Err(Failure::new(MlStatus::InvalidInput, format!("bad seed label {other}")))
                }
            };
            seeds.insert(user.to_owned(), label);
        }
        let op = normalize_adjacency(&g.inner)?;
        let cfg = SpreadConfig {
            alpha,
            tolerance,
            max_iterations,
        };
        let result = label_spread(&op, &seeds, &cfg)?;
        let mut scores = MlScores {
            users: Vec::new(),
            scores: Vec::new(),
            index: BTreeMap::new(),
            iterations: result.iterations,
        };
        for (u, s) in result.leaning_scores() {
            scores.index.insert(u.clone(), scores.users.len());
            scores.users.push(CString::new(u).map_err(|_| Failure::new(MlStatus::InvalidInput, "user id contains NUL"))?);
            scores.scores.push(s);
        }
        *out = Box::into_raw(Box::new(scores));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_scores_free(s: *mut MlScores) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of scored users.
///
/// # Safety
/// `s` must be a live scores handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ml_scores_len(s: *const MlScores) -> usize {
    s.as_ref().map_or(0, |s| s.users.len())
}

/// Iterations the spreading took.
///
/// # Safety
/// `s` must be a live scores handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ml_scores_iterations(s: *const MlScores) -> usize {
    s.as_ref().map_or(0, |s| s.iterations)
}

/// The `i`-th scored user in id order. `*user` borrows from the handle and
/// stays valid until it is freed.
///
/// # Safety
/// `s` must be a live scores handle; `user` and `score` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_scores_at(
    s: *const MlScores,
    i: usize,
    user: *mut *const c_char,
    score: *mut f64,
) -> MlStatus {
    guard(|| {
        let s = handle(s, "scores")?;
        let (user, score) = (out_arg(user, "user")?, out_arg(score, "score")?);
        let (u, v) = s
            .users
            .get(i)
            .zip(s.scores.get(i))
            .ok_or_else(|| Failure::new(MlStatus::InvalidInput, format!("index {i} out of range")))?;
        *user = u.as_ptr();
        *score = *v;
        Ok(())
    })
}

/// Score of `user`; `*found` is false for users that were not reached.
///
/// # Safety
/// `s` must be a live scores handle; `user` NUL-terminated; `score` and
/// `found` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_scores_get(
    s: *const MlScores,
    user: *const c_char,
    score: *mut f64,
    found: *mut bool,
) -> MlStatus {
    guard(|| {
        let s = handle(s, "scores")?;
        let user = str_arg(user, "user")?;
        let (score, found) = (out_arg(score, "score")?, out_arg(found, "found")?);
        match s.index.get(user) {
            Some(&i) => {
                *score = s.scores[i];
                *found = true;
            }
            None => {
                *score = f64::NAN;
                *found = false;
            }
        }
        Ok(())
    })
}

/// Loads a public suffix list file.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_suffix_rules_load(path: *const c_char, out: *mut *mut MlSuffixRules) -> MlStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        let inner = SuffixRules::load(&path)?;
        *out = Box::into_raw(Box::new(MlSuffixRules { inner }));
        Ok(())
    })
}

/// Parses public suffix rules from text.
///
/// # Safety
/// `text` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_suffix_rules_parse(text: *const c_char, out: *mut *mut MlSuffixRules) -> MlStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(MlSuffixRules {
            inner: SuffixRules::parse(text),
        }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_suffix_rules_free(r: *mut MlSuffixRules) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Registrable domain of a URL. Release `*out` with [`ml_string_free`].
///
/// # Safety
/// `rules` must be a live handle; `url` NUL-terminated; `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ml_extract_domain(
    rules: *const MlSuffixRules,
    url: *const c_char,
    out: *mut *mut c_char,
) -> MlStatus {
    guard(|| {
        let rules = handle(rules, "rules")?;
        let url = str_arg(url, "url")?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(&extract_domain(url, &rules.inner)?)?;
        Ok(())
    })
}

/// Loads a gazetteer CSV.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_gazetteer_load(path: *const c_char, out: *mut *mut MlGazetteer) -> MlStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        let (inner, _) = load_gazetteer(&path)?;
        *out = Box::into_raw(Box::new(MlGazetteer { inner }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_gazetteer_free(g: *mut MlGazetteer) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Country code of a profile location string. `*out` is set to NULL when
/// the string is unknown or ambiguous; otherwise release it with
/// [`ml_string_free`].
///
/// # Safety
/// `g` must be a live handle; `location` NUL-terminated; `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ml_gazetteer_resolve(
    g: *const MlGazetteer,
    location: *const c_char,
    out: *mut *mut c_char,
) -> MlStatus {
    guard(|| {
        let g = handle(g, "gazetteer")?;
        let location = str_arg(location, "location")?;
        let out = out_arg(out, "out")?;
        *out = match g.inner.resolve(location) {
            Some(c) => into_c_string(c)?,
            None => ptr::null_mut(),
        };
        Ok(())
    })
}

unsafe fn correlate(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    r: *mut f64,
    p: *mut f64,
    f: fn(&[f64], &[f64]) -> medialean::Result<medialean::report::Correlation>,
) -> MlStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            return Err(null("input arrays"));
        }
        let (r, p) = (out_arg(r, "r")?, out_arg(p, "p")?);
        let c = f(std::slice::from_raw_parts(xs, n), std::slice::from_raw_parts(ys, n))?;
        *r = c.coefficient;
        *p = c.p_value;
        Ok(())
    })
}

/// Pearson correlation and two-sided p-value of two arrays of length `n`.
///
/// # Safety
/// `xs` and `ys` must hold `n` elements; `r` and `p` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ml_pearson(xs: *const f64, ys: *const f64, n: usize, r: *mut f64, p: *mut f64) -> MlStatus {
    correlate(xs, ys, n, r, p, pearson)
}

/// Spearman rank correlation and two-sided p-value, ties at average rank.
///
/// # Safety
/// As for [`ml_pearson`].
#[no_mangle]
pub unsafe extern "C" fn ml_spearman(xs: *const f64, ys: *const f64, n: usize, r: *mut f64, p: *mut f64) -> MlStatus {
    correlate(xs, ys, n, r, p, spearman)
}

/// Runs one pipeline stage (`ingest` .. `report`, or `all`) from a config
/// file. A missing upstream stage yields [`MlStatus::MissingArtifact`].
///
/// # Safety
/// `config_path` and `stage` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ml_run_stage(config_path: *const c_char, stage: *const c_char, workers: usize) -> MlStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(config_path, "config_path")?);
        let stage: Stage = str_arg(stage, "stage")?.parse()?;
        let cfg = PipelineConfig::load(&path)?;
        let opts = RunOptions {
            workers: workers.max(1),
            allow_network: false,
        };
        run_stage(stage, &cfg, &opts)?;
        Ok(())
    })
}
