use std::ffi::{CStr, CString};
use std::ptr;

use medialean::pipeline::PipelineConfig;
use medialean_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> Option<String> {
    let p = ml_last_error_message();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { ml_string_free(p) };
    Some(s)
}

fn fixtures() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(ml_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn graph_backbone_and_spreading() {
    unsafe {
        let g = ml_graph_new();
        for (u, v, w) in [("a", "b", 10), ("b", "c", 1), ("c", "d", 10), ("a", "c", 1), ("b", "d", 1)] {
            assert_eq!(ml_graph_add_edge(g, c(u).as_ptr(), c(v).as_ptr(), w), MlStatus::Ok);
        }
        assert_eq!(ml_graph_node_count(g), 4);
        assert_eq!(ml_graph_edge_count(g), 5);
        assert_eq!(ml_graph_add_seed(g, c("a").as_ptr()), MlStatus::Ok);
        assert_eq!(ml_graph_add_seed(g, c("zz").as_ptr()), MlStatus::InvalidInput);
        assert!(last_error().unwrap().contains("zz"));

        let mut bb = ptr::null_mut();
        assert_eq!(ml_graph_backbone(g, 0.05, true, &mut bb), MlStatus::Ok);
        assert!(ml_graph_edge_count(bb) <= 5);
        ml_graph_free(bb);

        let users = [c("a"), c("d")];
        let user_ptrs: Vec<_> = users.iter().map(|u| u.as_ptr()).collect();
        let labels = [MlLabel::Left, MlLabel::Right];
        let mut scores = ptr::null_mut();
        let st = ml_label_spread(g, user_ptrs.as_ptr(), labels.as_ptr(), 2, 0.5, 1e-10, 1000, &mut scores);
        assert_eq!(st, MlStatus::Ok);
        assert_eq!(ml_scores_len(scores), 4);
        assert!(ml_scores_iterations(scores) > 0);

        let (mut s, mut found) = (0.0, false);
        assert_eq!(ml_scores_get(scores, c("b").as_ptr(), &mut s, &mut found), MlStatus::Ok);
        assert!(found && s < 0.0);
        assert_eq!(ml_scores_get(scores, c("nobody").as_ptr(), &mut s, &mut found), MlStatus::Ok);
        assert!(!found && s.is_nan());

        let mut user = ptr::null();
        assert_eq!(ml_scores_at(scores, 0, &mut user, &mut s), MlStatus::Ok);
        assert_eq!(CStr::from_ptr(user).to_str().unwrap(), "a");
        assert_eq!(ml_scores_at(scores, 4, &mut user, &mut s), MlStatus::InvalidInput);

        ml_scores_free(scores);
        ml_graph_free(g);
    }
}

#[test]
fn spreading_rejects_bad_alpha() {
    unsafe {
        let g = ml_graph_new();
        ml_graph_add_edge(g, c("a").as_ptr(), c("b").as_ptr(), 1);
        let users = [c("a")];
        let ptrs = [users[0].as_ptr()];
        let labels = [MlLabel::Left];
        let mut out = ptr::null_mut();
        assert_eq!(ml_label_spread(g, ptrs.as_ptr(), labels.as_ptr(), 1, 1.5, 1e-10, 1000, &mut out), MlStatus::OutOfDomain);
        assert!(out.is_null());
        ml_graph_free(g);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(ml_graph_add_edge(ptr::null_mut(), c("a").as_ptr(), c("b").as_ptr(), 1), MlStatus::NullPointer);
        assert!(last_error().unwrap().contains("graph"));
        assert_eq!(ml_disparity_pvalue(0.5, 3, ptr::null_mut()), MlStatus::NullPointer);
        assert_eq!(ml_graph_node_count(ptr::null()), 0);
        ml_graph_free(ptr::null_mut());
        ml_string_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_last_error() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(ml_disparity_pvalue(2.0, 3, &mut out), MlStatus::OutOfDomain);
        assert!(last_error().is_some());
        assert_eq!(ml_disparity_pvalue(0.5, 3, &mut out), MlStatus::Ok);
        assert_eq!(out, 0.25);
        assert!(last_error().is_none());
    }
}

#[test]
fn domains_through_the_c_api() {
    unsafe {
        let mut rules = ptr::null_mut();
        let path = c(fixtures().join("public_suffix_list.dat").to_str().unwrap());
        assert_eq!(ml_suffix_rules_load(path.as_ptr(), &mut rules), MlStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(ml_extract_domain(rules, c("https://news.bbc.co.uk/x").as_ptr(), &mut out), MlStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "bbc.co.uk");
        ml_string_free(out);
        assert_eq!(ml_extract_domain(rules, c("http://10.1.2.3/").as_ptr(), &mut out), MlStatus::Parse);
        ml_suffix_rules_free(rules);

        let mut small = ptr::null_mut();
        assert_eq!(ml_suffix_rules_parse(c("com\n").as_ptr(), &mut small), MlStatus::Ok);
        assert_eq!(ml_extract_domain(small, c("a.b.example.com").as_ptr(), &mut out), MlStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "example.com");
        ml_string_free(out);
        ml_suffix_rules_free(small);
    }
}

#[test]
fn gazetteer_through_the_c_api() {
    unsafe {
        let mut g = ptr::null_mut();
        let path = c(fixtures().join("synthetic/gazetteer.csv").to_str().unwrap());
        assert_eq!(ml_gazetteer_load(path.as_ptr(), &mut g), MlStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(ml_gazetteer_resolve(g, c("Toronto, Ontario").as_ptr(), &mut out), MlStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "CA");
        ml_string_free(out);
        assert_eq!(ml_gazetteer_resolve(g, c("Paris").as_ptr(), &mut out), MlStatus::Ok);
        assert!(out.is_null());
        ml_gazetteer_free(g);

        let missing = c("/definitely/not/here.csv");
        assert_eq!(ml_gazetteer_load(missing.as_ptr(), &mut g), MlStatus::Io);
    }
}

#[test]
fn correlations_through_the_c_api() {
    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    let ys = [2.0, 4.0, 6.0, 8.0, 10.0];
    let (mut r, mut p) = (0.0, 0.0);
    unsafe {
        assert_eq!(ml_pearson(xs.as_ptr(), ys.as_ptr(), 5, &mut r, &mut p), MlStatus::Ok);
        assert_eq!(r, 1.0);
        assert_eq!(ml_spearman(xs.as_ptr(), ys.as_ptr(), 5, &mut r, &mut p), MlStatus::Ok);
        assert_eq!(r, 1.0);
        let flat = [1.0; 5];
        assert_eq!(ml_pearson(xs.as_ptr(), flat.as_ptr(), 5, &mut r, &mut p), MlStatus::Degenerate);
        assert_eq!(ml_pearson(ptr::null(), ys.as_ptr(), 5, &mut r, &mut p), MlStatus::NullPointer);
    }
}

#[test]
fn run_stage_reports_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::load(&fixtures().join("synthetic/config.toml")).unwrap();
    cfg.output_dir = dir.path().join("out");
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let cfg = c(cfg_path.to_str().unwrap());
    let status = unsafe { ml_run_stage(cfg.as_ptr(), c("spread").as_ptr(), 1) };
    let bad_stage = unsafe { ml_run_stage(cfg.as_ptr(), c("nonsense").as_ptr(), 1) };
    assert_eq!(status, MlStatus::MissingArtifact);
    assert_eq!(bad_stage, MlStatus::InvalidInput);
    let missing = unsafe { ml_run_stage(c("/no/such/config.toml").as_ptr(), c("all").as_ptr(), 1) };
    assert_eq!(missing, MlStatus::Config);
}
