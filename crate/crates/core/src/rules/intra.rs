//! Rule 1: per-assertion simplification over time-stamped buckets.

use std::collections::{BTreeMap, HashMap};

use super::simplify::{node_count, simplify, substitute};
use super::{Edits, RuleId, RuleOutcome};
use crate::assertion::{print_assertion, Assertion, BoolExpr, Sequence};
use crate::sat::{entails_expr, expr_is_sat};
use crate::temporal::{align, rebuild, timed_name, TimedExpansion};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntraResult {
    Unchanged,
    Delete,
    Rewrite(Assertion),
}

/// `(atom occurrences, printed length, AST nodes)`; a rewrite must shrink it.
fn size_key(a: &Assertion) -> (usize, usize, usize) {
    let nodes = a.antecedent.items().chain(a.consequent.items()).map(node_count).sum();
    (a.atom_occurrences(), print_assertion(a).len(), nodes)
}

fn sat(e: &BoolExpr) -> Option<bool> {
    expr_is_sat(e).ok()
}

fn stamped(buckets: &BTreeMap<u32, BoolExpr>) -> BoolExpr {
    BoolExpr::and_all(
        buckets
            .iter()
            .map(|(&k, e)| e.map_atoms(&|a| timed_name(a, k)))
            .collect(),
    )
}

enum Step {
    Keep,
    Delete,
    Replace(Assertion),
}

fn propositional_step(a: &Assertion, cond: &BoolExpr) -> Step {
    let c = simplify(cond);
    if sat(&BoolExpr::negated(c.clone())) == Some(false) {
        return Step::Delete;
    }
    let c = if sat(&c) == Some(false) { BoolExpr::Const(false) } else { c };
    Step::Replace(Assertion::propositional(a.id.clone(), a.clock.clone(), c))
}

/// Ranged assertions: simplify each item in place.
fn itemwise_step(a: &Assertion, expansions: &[TimedExpansion]) -> Step {
    let simp = |s: &Sequence| Sequence {
        head: simplify(&s.head),
        tail: s.tail.iter().map(|(d, e)| (*d, simplify(e))).collect(),
    };
    let ante = simp(&a.antecedent);
    if ante.items().any(BoolExpr::is_false) {
        return Step::Delete;
    }
    let valid = expansions
        .iter()
        .all(|x| entails_expr(&x.pre_formula(), &x.post_formula()) == Ok(true));
    if valid {
        return Step::Delete;
    }
    Step::Replace(Assertion::implication(a.id.clone(), a.clock.clone(), ante, simp(&a.consequent)))
}

fn single_step(a: &Assertion, x: &TimedExpansion) -> Step {
    let pre: BTreeMap<u32, BoolExpr> = x
        .pre
        .iter()
        .map(|(&k, e)| (k, simplify(e)))
        .filter(|(_, e)| !e.is_true())
        .collect();
    let pre_f = stamped(&pre);
    match sat(&pre_f) {
        Some(false) => return Step::Delete,
        None => return Step::Keep,
        Some(true) => {}
    }
    // timed atoms whose value the antecedent forces
    let mut fixed: HashMap<String, bool> = HashMap::new();
    for name in pre_f.atoms() {
        let atom = BoolExpr::atom(name.clone());
        if entails_expr(&pre_f, &atom) == Ok(true) {
            fixed.insert(name, true);
        } else if entails_expr(&pre_f, &BoolExpr::negated(atom)) == Ok(true) {
            fixed.insert(name, false);
        }
    }
    let mut post: BTreeMap<u32, BoolExpr> = BTreeMap::new();
    for (&k, e) in &x.post {
        let e = simplify(&substitute(e, &|n| fixed.get(&timed_name(n, k)).copied()));
        let kept: Vec<BoolExpr> = e
            .conjuncts()
            .into_iter()
            .filter(|c| {
                c.is_false() || entails_expr(&pre_f, &c.map_atoms(&|n| timed_name(n, k))) != Ok(true)
            })
            .collect();
        if !kept.is_empty() {
            post.insert(k, BoolExpr::and_all(kept));
        }
    }
    if post.is_empty() {
        return Step::Delete;
    }
    let anchor = pre.keys().next_back().copied().unwrap_or(0);
    let conflict = sat(&BoolExpr::And(vec![pre_f, stamped(&post)])) == Some(false);
    if conflict {
        post = BTreeMap::from([(anchor, BoolExpr::Const(false))]);
    }
    let max_offset = post.keys().chain(pre.keys()).copied().max().unwrap_or(0);
    let exp = TimedExpansion {
        pre,
        post,
        anchor,
        max_offset,
    };
    match rebuild(&exp, a.clock.as_deref(), &a.id) {
        Ok(b) => Step::Replace(b),
        Err(_) => Step::Keep,
    }
}

fn step(a: &Assertion) -> Step {
    if let Some(cond) = a.condition() {
        return propositional_step(a, cond);
    }
    let Ok(set) = align(a) else {
        return Step::Keep;
    };
    if set.len() > 1 {
        itemwise_step(a, &set.expansions)
    } else {
        single_step(a, &set.expansions[0])
    }
}

/// Simplify one assertion to a fixpoint. Opaque assertions and refused SAT
/// queries leave it unchanged.
pub fn simplify_assertion(a: &Assertion) -> IntraResult {
    let mut cur = a.clone();
    for _ in 0..8 {
        match step(&cur) {
            Step::Delete => return IntraResult::Delete,
            Step::Keep => break,
            Step::Replace(b) => {
                if size_key(&b) < size_key(&cur) {
                    cur = b;
                } else {
                    break;
                }
            }
        }
    }
    if cur == *a {
        IntraResult::Unchanged
    } else {
        IntraResult::Rewrite(cur)
    }
}

pub fn apply_rule1(set: &[Assertion]) -> RuleOutcome {
    let mut edits = Edits::new(RuleId::R1IntraSimplify, set);
    for (i, a) in set.iter().enumerate() {
        match simplify_assertion(a) {
            IntraResult::Unchanged => {}
            IntraResult::Delete => edits.remove(i),
            IntraResult::Rewrite(b) => edits.rewrite(i, b),
        }
    }
    edits.finish()
}
