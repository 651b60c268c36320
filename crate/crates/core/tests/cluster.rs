mod common;

use std::collections::BTreeSet;

use asred::assertion::parse_assertion;
use asred::cluster::{classify, dbscan_indices, fuse, truth_table_similarity, ClusterError};
use asred::config::Config;
use asred::corpus::generate_synthetic;
use asred::embed::HashEmbedder;
use asred::omega::{acceptance_vector, jaccard, ltl_to_buchi, LassoBounds, LassoPool};
use asred::temporal::to_ltl;
use asred::Assertion;
use common::{parse_set, random_set};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn clusters_of(set: &[Assertion]) -> Vec<Vec<String>> {
    classify(set, &Config::default(), &HashEmbedder::default()).unwrap().0.clusters
}

fn together(clusters: &[Vec<String>], x: &str, y: &str) -> bool {
    clusters.iter().any(|c| c.iter().any(|i| i == x) && c.iter().any(|i| i == y))
}

#[test]
fn contradicting_consequents_are_separated() {
    let set = parse_set(&["@(posedge clk) a |-> b", "@(posedge clk) a |-> !b"]);
    let c = clusters_of(&set);
    assert_eq!(c.len(), 2, "{c:?}");
}

#[test]
fn duplicates_share_a_cluster() {
    let set = parse_set(&["@(posedge clk) a |-> b", "@(posedge clk) a |-> b", "@(posedge clk) x ##2 y |-> !z"]);
    let c = clusters_of(&set);
    assert!(together(&c, "a0", "a1"), "{c:?}");
    assert!(!together(&c, "a0", "a2"), "{c:?}");
}

#[test]
fn clustering_is_deterministic() {
    let (corpus, _) = generate_synthetic(20, 3, 4);
    let first = clusters_of(&corpus.assertions);
    for _ in 0..10 {
        assert_eq!(clusters_of(&corpus.assertions), first);
    }
    let mut reversed = corpus.assertions.clone();
    reversed.reverse();
    assert_eq!(clusters_of(&reversed), first);
}

#[test]
fn input_errors() {
    let set = parse_set(&["a |-> b", "c |-> d"]);
    let dup = vec![set[0].clone(), set[1].clone().with_id("a0")];
    assert!(matches!(
        classify(&dup, &Config::default(), &HashEmbedder::default()),
        Err(ClusterError::DuplicateId(_))
    ));
    let cfg = Config {
        alpha: 0.5,
        ..Config::default()
    };
    assert!(matches!(classify(&set, &cfg, &HashEmbedder::default()), Err(ClusterError::WeightSum { .. })));
    let (empty, _) = classify(&[], &Config::default(), &HashEmbedder::default()).unwrap();
    assert!(empty.is_empty());
}

#[test]
fn dbscan_on_a_line() {
    // points 0, 0.1, 0.2, 5, 10 on a line
    let x = [0.0, 0.1, 0.2, 5.0, 10.0, 10.05];
    let d: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| f64::abs(a - b)).collect()).collect();
    assert_eq!(dbscan_indices(&d, 0.15, 2), vec![vec![0, 1, 2], vec![3], vec![4, 5]]);
    assert_eq!(dbscan_indices(&d, 0.15, 3), vec![vec![0, 1, 2], vec![3], vec![4], vec![5]]);
}

fn lasso_similarity(a: &Assertion, b: &Assertion) -> f64 {
    let (fa, fb) = (to_ltl(a).unwrap(), to_ltl(b).unwrap());
    let mut atoms = fa.atoms();
    atoms.extend(fb.atoms());
    let pool = LassoPool::sample(&atoms, 500, 1, LassoBounds::default());
    let va = acceptance_vector(&ltl_to_buchi(&fa).unwrap(), &pool).unwrap();
    let vb = acceptance_vector(&ltl_to_buchi(&fb).unwrap(), &pool).unwrap();
    jaccard(&va, &vb).unwrap()
}

#[test]
fn truth_table_fast_path_on_exact_cases() {
    let p = |s: &str, id: &str| parse_assertion(s, id).unwrap();
    let equivalent = [("!(a && b)", "!a || !b"), ("a || (a && b)", "a"), ("!x || !y || z", "!y || z || !x")];
    for (x, y) in equivalent {
        let (a, b) = (p(x, "1"), p(y, "2"));
        assert_eq!(truth_table_similarity(&a, &b), Some(1.0));
        assert_eq!(lasso_similarity(&a, &b), 1.0);
    }
    for (x, y) in [("a", "!a"), ("a && b", "!a || !b")] {
        let (a, b) = (p(x, "1"), p(y, "2"));
        assert_eq!(truth_table_similarity(&a, &b), Some(0.0));
        assert_eq!(lasso_similarity(&a, &b), 0.0);
    }
    assert_eq!(truth_table_similarity(&p("a |-> b", "1"), &p("a", "2")), None);
}

#[test]
fn fused_similarity_arithmetic() {
    let ids = vec!["x".to_string(), "y".to_string()];
    let m = fuse(ids, vec![vec![1.0, 0.5], vec![0.5, 1.0]], vec![vec![None, Some(0.25)], vec![Some(0.25), None]], 0.4, 0.6)
        .unwrap();
    assert!((m.s_fused[0][1] - 0.35).abs() < 1e-12);
    assert!((m.d[1][0] - 0.65).abs() < 1e-12);
    assert_eq!(m.d[0][0], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn clusters_partition_the_corpus(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(&mut rng);
        let c = clusters_of(&set);
        let ids: Vec<&String> = c.iter().flatten().collect();
        let unique: BTreeSet<&String> = ids.iter().copied().collect();
        prop_assert_eq!(ids.len(), set.len());
        prop_assert_eq!(unique.len(), set.len());
        prop_assert!(c.iter().all(|k| !k.is_empty()));
    }

    #[test]
    fn fusion_is_monotone(nl in 0.0f64..1.0, l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, alpha in 0.0f64..1.0) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let m = |l: f64| {
            let ids = vec!["x".to_string(), "y".to_string()];
            fuse(ids, vec![vec![1.0, nl], vec![nl, 1.0]], vec![vec![None, Some(l)], vec![Some(l), None]], alpha, 1.0 - alpha)
                .unwrap()
        };
        let (a, b) = (m(lo), m(hi));
        prop_assert!(a.s_fused[0][1] <= b.s_fused[0][1] + 1e-12);
        prop_assert!(a.d[0][1] >= b.d[0][1] - 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&b.s_fused[0][1]));
    }
}
