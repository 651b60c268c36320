mod common;

use asred::assertion::{parse_assertion, parse_bool_expr, BoolExpr};
use asred::sat::{self, expr_is_sat, truth_table_sat_set, CnfFormula, SatError};
use common::{parse_set, random_set};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 5] = ["v", "w", "x", "y", "z"];

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> BoolExpr {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..12) {
            0 => BoolExpr::Const(rng.random_bool(0.5)),
            _ => BoolExpr::atom(*VARS.choose(rng).unwrap()),
        };
    }
    let k = rng.random_range(2..=3);
    match rng.random_range(0..3) {
        0 => BoolExpr::negated(random_expr(rng, depth - 1)),
        1 => BoolExpr::And((0..k).map(|_| random_expr(rng, depth - 1)).collect()),
        _ => BoolExpr::Or((0..k).map(|_| random_expr(rng, depth - 1)).collect()),
    }
}

/// Enumerate all 32 assignments.
fn brute_sat(e: &BoolExpr) -> bool {
    (0..32u32).any(|m| e.eval(&|n: &str| VARS.iter().position(|v| *v == n).is_some_and(|i| m >> i & 1 == 1)))
}

#[test]
fn dpll_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut sat, mut unsat) = (0, 0);
    for _ in 0..6000 {
        let e = random_expr(&mut rng, 4);
        let expected = brute_sat(&e);
        assert_eq!(expr_is_sat(&e).unwrap(), expected, "{e:?}");
        if expected {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    assert!(unsat > 200, "too few unsatisfiable samples: {unsat} vs {sat}");
}

#[test]
fn entailment_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let (p, q) = (random_expr(&mut rng, 3), random_expr(&mut rng, 3));
        let expected = !brute_sat(&BoolExpr::And(vec![p.clone(), BoolExpr::negated(q.clone())]));
        assert_eq!(sat::entails_expr(&p, &q).unwrap(), expected, "{p:?} |= {q:?}");
    }
}

#[test]
fn truth_table_counts_models() {
    let atoms: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
    let e = parse_bool_expr("a && !b").unwrap();
    let t = truth_table_sat_set(&e, &atoms).unwrap();
    assert_eq!(t.ones().collect::<Vec<_>>(), vec![1]);
    let e = parse_bool_expr("a || b").unwrap();
    assert_eq!(truth_table_sat_set(&e, &atoms).unwrap().count_ones(), 3);
}

#[test]
fn budget_refusal() {
    let mut f = CnfFormula::new();
    for i in 0..10 {
        f.var(&format!("x{i}"));
    }
    assert!(matches!(sat::is_sat_with_budget(&f, 4), Err(SatError::VariableBudget { .. })));
    assert!(sat::is_sat_with_budget(&f, 10).unwrap());
}

#[test]
fn timed_examples() {
    let s = parse_set(&["a |-> ##1 c", "a ##1 1 |-> c"]);
    assert!(sat::equivalent(&s[0], &s[1]).unwrap());
    let s = parse_set(&["a |-> c", "a && b |-> c"]);
    assert!(sat::implies(&s[0], &s[1]).unwrap());
    assert!(!sat::implies(&s[1], &s[0]).unwrap());
    let s = parse_set(&["a ##[1:2] b |-> c", "a ##1 b |-> c", "a ##2 b |-> c"]);
    assert!(sat::set_equivalent(&s[..1], &s[1..]).unwrap());
    let wide = parse_assertion("a ##[0:40] b ##[0:40] c |-> d", "w").unwrap();
    assert!(sat::equivalent(&wide, &wide).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn equivalence_is_an_equivalence_relation(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_set(&mut rng);
        let (x, y, z) = (&s[0], &s[1], &s[s.len() - 1]);
        prop_assert!(sat::equivalent(x, x).unwrap());
        prop_assert_eq!(sat::equivalent(x, y).unwrap(), sat::equivalent(y, x).unwrap());
        if sat::implies(x, y).unwrap() && sat::implies(y, z).unwrap() {
            prop_assert!(sat::implies(x, z).unwrap());
        }
        if sat::equivalent(x, y).unwrap() && sat::equivalent(y, z).unwrap() {
            prop_assert!(sat::equivalent(x, z).unwrap());
        }
    }
}
