//! Structural normalization and canonical keys.

use serde::{Deserialize, Serialize};

use super::ast::{Assertion, BoolExpr, Sequence};
use crate::util::stable_hash;

/// Serialized canonical form of a boolean expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalKey(pub String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Flatten nested `&&`/`||`, drop identity constants, fold constant-only
/// subterms, remove double negation and repeated children. Child order is
/// kept, and annihilating constants are not folded so the atom set is
/// unchanged.
pub fn normalize(e: &BoolExpr) -> BoolExpr {
    match e {
        BoolExpr::Atom(_) | BoolExpr::Const(_) => e.clone(),
        BoolExpr::Not(c) => match normalize(c) {
            BoolExpr::Not(inner) => *inner,
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            other => BoolExpr::negated(other),
        },
        BoolExpr::And(cs) => assoc(cs.iter().map(normalize), true),
        BoolExpr::Or(cs) => assoc(cs.iter().map(normalize), false),
    }
}

fn assoc(children: impl Iterator<Item = BoolExpr>, is_and: bool) -> BoolExpr {
    let mut flat: Vec<BoolExpr> = Vec::new();
    let push = |c: BoolExpr, flat: &mut Vec<BoolExpr>| {
        // identity element of the operator
        if c == BoolExpr::Const(is_and) {
            return;
        }
        if !flat.contains(&c) {
            flat.push(c);
        }
    };
    for c in children {
        match c {
            BoolExpr::And(inner) if is_and => inner.into_iter().for_each(|k| push(k, &mut flat)),
            BoolExpr::Or(inner) if !is_and => inner.into_iter().for_each(|k| push(k, &mut flat)),
            other => push(other, &mut flat),
        }
    }
    if is_and {
        BoolExpr::and_all(flat)
    } else {
        BoolExpr::or_all(flat)
    }
}

fn serialize(e: &BoolExpr, out: &mut String) {
    match e {
        BoolExpr::Atom(a) => out.push_str(a),
        BoolExpr::Const(b) => out.push(if *b { '1' } else { '0' }),
        BoolExpr::Not(c) => {
            out.push_str("!(");
            serialize(c, out);
            out.push(')');
        }
        BoolExpr::And(cs) | BoolExpr::Or(cs) => {
            out.push(if matches!(e, BoolExpr::And(_)) { '&' } else { '|' });
            out.push('(');
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                serialize(c, out);
            }
            out.push(')');
        }
    }
}

fn serialized(e: &BoolExpr) -> String {
    let mut s = String::new();
    serialize(e, &mut s);
    s
}

/// Canonical form: [`normalize`] plus children ordered by a stable 64-bit
/// hash of their serialization (ties broken by the serialization itself).
pub fn canonicalize(e: &BoolExpr) -> BoolExpr {
    match e {
        BoolExpr::Atom(_) | BoolExpr::Const(_) => e.clone(),
        BoolExpr::Not(c) => match canonicalize(c) {
            BoolExpr::Not(inner) => *inner,
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            other => BoolExpr::negated(other),
        },
        BoolExpr::And(cs) | BoolExpr::Or(cs) => {
            let is_and = matches!(e, BoolExpr::And(_));
            let merged = assoc(cs.iter().map(canonicalize), is_and);
            let is_and = matches!(merged, BoolExpr::And(_));
            match merged {
                BoolExpr::And(mut kids) | BoolExpr::Or(mut kids) => {
                    let mut keyed: Vec<(u64, String, BoolExpr)> = kids
                        .drain(..)
                        .map(|k| {
                            let s = serialized(&k);
                            (stable_hash(s.as_bytes()), s, k)
                        })
                        .collect();
                    keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
                    let kids = keyed.into_iter().map(|(_, _, k)| k).collect();
                    if is_and {
                        BoolExpr::And(kids)
                    } else {
                        BoolExpr::Or(kids)
                    }
                }
                other => other,
            }
        }
    }
}

pub fn canonical_key(e: &BoolExpr) -> CanonicalKey {
    CanonicalKey(serialized(&canonicalize(e)))
}

/// Key of a whole sequence: item keys joined with their delays.
pub fn sequence_key(s: &Sequence) -> CanonicalKey {
    let s = normalize_sequence(s);
    let mut out = canonical_key(&s.head).0;
    for (d, e) in &s.tail {
        out.push(' ');
        out.push_str(&d.to_string());
        out.push(' ');
        out.push_str(&canonical_key(e).0);
    }
    CanonicalKey(out)
}

/// Key identifying an assertion up to canonical rewriting (clock included).
pub fn assertion_key(a: &Assertion) -> CanonicalKey {
    CanonicalKey(format!(
        "{}|{:?}|{}|{}",
        a.clock.as_deref().unwrap_or(""),
        a.kind,
        sequence_key(&a.antecedent).0,
        sequence_key(&a.consequent).0
    ))
}

/// Normalize every item; an interior `1` item between two delays is
/// absorbed by summing the delays (`x ##1 1 ##1 y` is `x ##2 y`).
pub fn normalize_sequence(s: &Sequence) -> Sequence {
    let head = normalize(&s.head);
    let mut tail: Vec<_> = s.tail.iter().map(|(d, e)| (*d, normalize(e))).collect();
    // tail[k].1 sits between delays tail[k].0 and tail[k + 1].0
    let mut k = 0;
    while k + 1 < tail.len() {
        if tail[k].1.is_true() {
            let (d_in, _) = tail.remove(k);
            tail[k].0 = d_in.plus(tail[k].0);
        } else {
            k += 1;
        }
    }
    Sequence { head, tail }
}

pub fn normalize_assertion(a: &Assertion) -> Assertion {
    Assertion {
        id: a.id.clone(),
        clock: a.clock.clone(),
        antecedent: normalize_sequence(&a.antecedent),
        consequent: normalize_sequence(&a.consequent),
        kind: a.kind,
    }
}
