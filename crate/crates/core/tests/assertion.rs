mod common;

use asred::assertion::{assertion_key, parse_assertion, print_assertion, Delay};
use asred::sat;
use common::random_set;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn round(s: &str) -> String {
    print_assertion(&parse_assertion(s, "x").unwrap())
}

#[test]
fn printer_examples() {
    assert_eq!(round("@(posedge clk) a |=> b"), "@(posedge clk) a |-> ##1 b");
    assert_eq!(round("a ##[1:3] b |-> c"), "a ##[1:3] b |-> c");
}

#[test]
fn parse_errors_carry_positions() {
    for bad in ["", "a |->", "a ##1", "a ##[3:1] b |-> c", "a && |-> b", "a |-> b)", "2 |-> a", "a b"] {
        let err = parse_assertion(bad, "x").expect_err(bad);
        assert!(err.line >= 1 && err.column >= 1, "{bad}: {err}");
        assert!(!err.message.is_empty());
    }
}

#[test]
fn delays() {
    assert!(Delay::new(3, 1).is_none());
    let d = Delay::new(1, 2).unwrap();
    assert_eq!(d.plus(Delay::fixed(2)), Delay::new(3, 4).unwrap());
    assert_eq!(d.width(), 2);
    assert!(Delay::fixed(4).is_fixed());
}

#[test]
fn key_ignores_order_and_duplicates() {
    let k = |s: &str| assertion_key(&parse_assertion(s, "x").unwrap());
    assert_eq!(k("a && b |-> c"), k("b && a && b |-> c"));
    assert_eq!(k("(a || b) |-> ##1 c"), k("(b || a) |-> ##1 c"));
    assert_ne!(k("a |-> ##1 c"), k("a |-> ##2 c"));
    assert_ne!(k("a |-> c"), k("a |-> !c"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in random_set(&mut rng) {
            let text = print_assertion(&a);
            let back = parse_assertion(&text, &a.id).unwrap();
            prop_assert_eq!(print_assertion(&back), text.clone());
            prop_assert_eq!(assertion_key(&back), assertion_key(&a));
        }
    }

    #[test]
    fn equal_keys_mean_equivalent(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_set(&mut rng);
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if assertion_key(&s[i]) == assertion_key(&s[j]) {
                    prop_assert!(sat::equivalent(&s[i], &s[j]).unwrap());
                }
            }
        }
    }
}
