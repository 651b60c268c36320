mod common;

use std::collections::BTreeSet;

use asred::config::Config;
use asred::corpus::{generate_synthetic, load_corpus, save_corpus, Corpus, CorpusError};
use asred::embed::HashEmbedder;
use asred::pipeline::{emit_report, run_pipeline, ReductionReport, ReportFormat, SatStatus};
use common::{lasso_equivalent, parse_set};

fn run(corpus: &Corpus) -> (Corpus, ReductionReport) {
    run_pipeline(corpus, &Config::default(), &HashEmbedder::default()).unwrap()
}

#[test]
fn synthetic_corpus_reduces_soundly() {
    let (corpus, truth) = generate_synthetic(10, 3, 1);
    let (reduced, report) = run(&corpus);
    assert_eq!(report.original_count, 40);
    assert_eq!(report.reduced_count, reduced.len());
    assert!(report.reduction_ratio >= 0.5, "{}", report.reduction_ratio);
    assert!(!report.has_incidents());
    assert_eq!(report.certificates.failures, 0);
    assert!(report.atoms_after < report.atoms_before);
    let removed: usize = report.rules.values().map(|t| t.assertions_removed).sum();
    assert_eq!(removed, report.original_count - report.reduced_count);
    // bases use disjoint atoms, so no class can absorb another
    let classes: BTreeSet<&str> = corpus.assertions.iter().map(|a| truth.class_of(&a.id).unwrap()).collect();
    assert!(reduced.len() >= classes.len());
    assert_eq!(lasso_equivalent(&corpus.assertions, &reduced.assertions, 500, 3), Ok(()));
    for c in &report.clusters {
        assert!(c.certificate.passed);
        assert!(c.reduced_count <= c.original_count);
    }
}

#[test]
fn pipeline_is_deterministic() {
    let (corpus, _) = generate_synthetic(8, 2, 9);
    let (r1, rep1) = run(&corpus);
    let (r2, rep2) = run(&corpus);
    assert_eq!(r1.to_json_string(), r2.to_json_string());
    assert_eq!(rep1.without_timings(), rep2.without_timings());
}

#[test]
fn report_round_trips_through_json() {
    let (corpus, _) = generate_synthetic(5, 2, 2);
    let (_, report) = run(&corpus);
    let back: ReductionReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, ReportFormat::Text, &dir.path().join("r.txt")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert!(text.contains(&corpus.name));
    assert!(emit_report(&report, ReportFormat::Json, &dir.path().join("missing/r.json")).is_err());
}

#[test]
fn unrelated_corpus_is_left_alone() {
    let set = parse_set(&["a |-> b", "c ##1 d |-> e", "!f || g", "h |-> ##2 !i"]);
    let corpus = Corpus::new("plain", set.clone());
    let (reduced, report) = run(&corpus);
    assert_eq!(reduced.assertions, set);
    assert_eq!(report.reduction_ratio, 0.0);
    assert!(report.to_text().contains("0.0%"));
    assert!(report.clusters.iter().all(|c| c.sat == SatStatus::Verified || c.original_count == c.reduced_count));
}

#[test]
fn empty_corpus() {
    let (reduced, report) = run(&Corpus::new("empty", vec![]));
    assert!(reduced.is_empty());
    assert_eq!(report.reduction_ratio, 0.0);
}

#[test]
fn corpus_files() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = generate_synthetic(6, 2, 0);
    let path = dir.path().join("c.json");
    save_corpus(&corpus, &path).unwrap();
    let back = load_corpus(&path).unwrap();
    assert_eq!(back.to_json_string(), corpus.to_json_string());
    assert_eq!(back.assertions, corpus.assertions);

    assert!(matches!(load_corpus(&dir.path().join("nope.json")), Err(CorpusError::Io { .. })));
    let bad = |body: &str| {
        let p = dir.path().join("bad.json");
        std::fs::write(&p, body).unwrap();
        load_corpus(&p).unwrap_err()
    };
    assert!(matches!(bad("{"), CorpusError::Json(_)));
    let dup = r#"{"name": "d", "assertions": [{"id": "x", "text": "a |-> b"}, {"id": "x", "text": "c"}]}"#;
    assert!(matches!(bad(dup), CorpusError::DuplicateId(_)));
    let unparsable = r#"{"name": "d", "assertions": [{"id": "x", "text": "a |-> "}]}"#;
    assert!(matches!(bad(unparsable), CorpusError::Parse { .. }));
}
