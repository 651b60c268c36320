//! Sound local boolean simplification: constant folding, idempotence,
//! complements and absorption. Never introduces atoms.

use crate::assertion::BoolExpr;

fn flatten(kids: Vec<BoolExpr>, is_and: bool) -> Vec<BoolExpr> {
    let mut out = Vec::with_capacity(kids.len());
    for k in kids {
        match k {
            BoolExpr::And(inner) if is_and => out.extend(inner),
            BoolExpr::Or(inner) if !is_and => out.extend(inner),
            other => out.push(other),
        }
    }
    out
}

fn negation_of(e: &BoolExpr) -> BoolExpr {
    match e {
        BoolExpr::Not(c) => (**c).clone(),
        other => BoolExpr::negated(other.clone()),
    }
}

/// Children of `e` as seen by the dual operator (`x` is the one-element
/// list `[x]`).
fn dual_children(e: &BoolExpr, is_and: bool) -> Vec<&BoolExpr> {
    match e {
        BoolExpr::Or(cs) if is_and => cs.iter().collect(),
        BoolExpr::And(cs) if !is_and => cs.iter().collect(),
        other => vec![other],
    }
}

fn step(e: &BoolExpr) -> BoolExpr {
    match e {
        BoolExpr::Atom(_) | BoolExpr::Const(_) => e.clone(),
        BoolExpr::Not(c) => match step(c) {
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            BoolExpr::Not(inner) => *inner,
            other => BoolExpr::negated(other),
        },
        BoolExpr::And(cs) | BoolExpr::Or(cs) => {
            let is_and = matches!(e, BoolExpr::And(_));
            let kids = flatten(cs.iter().map(step).collect(), is_and);
            let mut uniq: Vec<BoolExpr> = Vec::with_capacity(kids.len());
            for k in kids {
                match k {
                    BoolExpr::Const(b) if b == is_and => {}
                    BoolExpr::Const(b) => return BoolExpr::Const(b),
                    k if uniq.contains(&k) => {}
                    k => uniq.push(k),
                }
            }
            // complement: x op !x
            for k in &uniq {
                if uniq.contains(&negation_of(k)) {
                    return BoolExpr::Const(!is_and);
                }
            }
            // absorption: drop a child whose dual-children include all of
            // another child's dual-children (x && (x || y) == x)
            let mut keep = vec![true; uniq.len()];
            for i in 0..uniq.len() {
                for j in 0..uniq.len() {
                    if i == j || !keep[j] {
                        continue;
                    }
                    let big = dual_children(&uniq[i], is_and);
                    let small = dual_children(&uniq[j], is_and);
                    let covers = small.iter().all(|s| big.contains(s));
                    if covers && (big.len() > small.len() || i > j) {
                        keep[i] = false;
                        break;
                    }
                }
            }
            let kids: Vec<BoolExpr> = uniq.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect();
            if is_and {
                BoolExpr::and_all(kids)
            } else {
                BoolExpr::or_all(kids)
            }
        }
    }
}

/// Apply the local rewrites to a fixpoint.
pub fn simplify(e: &BoolExpr) -> BoolExpr {
    let mut cur = e.nnf();
    loop {
        let next = step(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Replace atom occurrences by constants where `value` decides them.
pub fn substitute(e: &BoolExpr, value: &dyn Fn(&str) -> Option<bool>) -> BoolExpr {
    match e {
        BoolExpr::Atom(a) => value(a).map_or_else(|| e.clone(), BoolExpr::Const),
        BoolExpr::Const(_) => e.clone(),
        BoolExpr::Not(c) => BoolExpr::negated(substitute(c, value)),
        BoolExpr::And(cs) => BoolExpr::And(cs.iter().map(|c| substitute(c, value)).collect()),
        BoolExpr::Or(cs) => BoolExpr::Or(cs.iter().map(|c| substitute(c, value)).collect()),
    }
}

/// Number of AST nodes, constants included.
pub fn node_count(e: &BoolExpr) -> usize {
    match e {
        BoolExpr::Atom(_) | BoolExpr::Const(_) => 1,
        BoolExpr::Not(c) => 1 + node_count(c),
        BoolExpr::And(cs) | BoolExpr::Or(cs) => 1 + cs.iter().map(node_count).sum::<usize>(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertion::{parse_bool_expr, print_expr};

    fn s(text: &str) -> String {
        print_expr(&simplify(&parse_bool_expr(text).unwrap()))
    }

    #[test]
    fn local_rewrites() {
        assert_eq!(s("c && 1"), "c");
        assert_eq!(s("c && c"), "c");
        assert_eq!(s("c && (c || d)"), "c");
        assert_eq!(s("c || (c && d)"), "c");
        assert_eq!(s("!a && c && a"), "0");
        assert_eq!(s("a || !a || b"), "1");
        assert_eq!(s("!!a"), "a");
        assert_eq!(s("!(a && b)"), "!a || !b");
        assert_eq!(s("(a || b) && (a || b || c)"), "a || b");
        assert_eq!(s("a && 0"), "0");
    }

    #[test]
    fn never_adds_atoms() {
        for t in ["a && (b || !c)", "(a || b) && (c || d)", "!(a || (b && !a))"] {
            let e = parse_bool_expr(t).unwrap();
            assert!(simplify(&e).atom_occurrences() <= e.atom_occurrences());
        }
    }
}
