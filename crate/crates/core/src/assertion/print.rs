use super::ast::{Assertion, AssertionKind, BoolExpr, Sequence};
use super::key::normalize_assertion;

fn prec(e: &BoolExpr) -> u8 {
    match e {
        BoolExpr::Or(_) => 1,
        BoolExpr::And(_) => 2,
        _ => 3,
    }
}

fn write_expr(e: &BoolExpr, out: &mut String) {
    match e {
        BoolExpr::Atom(a) => out.push_str(a),
        BoolExpr::Const(b) => out.push(if *b { '1' } else { '0' }),
        BoolExpr::Not(c) => {
            out.push('!');
            if prec(c) < 3 {
                out.push('(');
                write_expr(c, out);
                out.push(')');
            } else {
                write_expr(c, out);
            }
        }
        BoolExpr::And(cs) | BoolExpr::Or(cs) => {
            let op = if matches!(e, BoolExpr::And(_)) { " && " } else { " || " };
            let p = prec(e);
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(op);
                }
                // same-operator children are parenthesized so nesting survives a reparse
                if prec(c) <= p {
                    out.push('(');
                    write_expr(c, out);
                    out.push(')');
                } else {
                    write_expr(c, out);
                }
            }
        }
    }
}

pub fn print_expr(e: &BoolExpr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_item(e: &BoolExpr, in_sequence: bool, out: &mut String) {
    let wrap = match e {
        BoolExpr::Or(_) => true,
        BoolExpr::And(_) => in_sequence,
        _ => false,
    };
    if wrap {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_sequence(s: &Sequence, out: &mut String) {
    let multi = !s.tail.is_empty();
    if multi && s.head.is_true() {
        // leading-delay form: `##1 b` stands for `1 ##1 b`
    } else {
        write_item(&s.head, multi, out);
    }
    for (i, (d, e)) in s.tail.iter().enumerate() {
        if i > 0 || !s.head.is_true() {
            out.push(' ');
        }
        out.push_str(&d.to_string());
        out.push(' ');
        write_item(e, multi, out);
    }
}

/// Assertion text without the clock prefix, after normalization.
pub fn print_body(a: &Assertion) -> String {
    let a = normalize_assertion(a);
    let mut out = String::new();
    match a.kind {
        AssertionKind::Propositional => write_expr(&a.consequent.head, &mut out),
        AssertionKind::Implication => {
            write_sequence(&a.antecedent, &mut out);
            out.push_str(" |-> ");
            write_sequence(&a.consequent, &mut out);
        }
    }
    out
}

/// Full assertion text, including the `@(posedge clk)` prefix when clocked.
pub fn print_assertion(a: &Assertion) -> String {
    match &a.clock {
        Some(clk) => format!("@(posedge {clk}) {}", print_body(a)),
        None => print_body(a),
    }
}
