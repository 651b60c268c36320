use std::collections::BTreeSet;
use std::fmt;

use crate::assertion::BoolExpr;

/// LTL in negation normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ltl {
    True,
    False,
    Atom(String),
    NotAtom(String),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Globally(Box<Ltl>),
    Finally(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    pub fn atom(name: impl Into<String>) -> Self {
        Ltl::Atom(name.into())
    }

    pub fn not_atom(name: impl Into<String>) -> Self {
        Ltl::NotAtom(name.into())
    }

    pub fn and(a: Ltl, b: Ltl) -> Self {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Self {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn next(a: Ltl) -> Self {
        Ltl::Next(Box::new(a))
    }

    pub fn globally(a: Ltl) -> Self {
        Ltl::Globally(Box::new(a))
    }

    pub fn finally(a: Ltl) -> Self {
        Ltl::Finally(Box::new(a))
    }

    pub fn until(a: Ltl, b: Ltl) -> Self {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Ltl, b: Ltl) -> Self {
        Ltl::Release(Box::new(a), Box::new(b))
    }

    /// `X^k f`.
    pub fn next_n(k: u32, f: Ltl) -> Self {
        (0..k).fold(f, |acc, _| Ltl::next(acc))
    }

    /// Left-nested conjunction; empty is `True`.
    pub fn and_all(items: Vec<Ltl>) -> Self {
        items.into_iter().reduce(Ltl::and).unwrap_or(Ltl::True)
    }

    /// Left-nested disjunction; empty is `False`.
    pub fn or_all(items: Vec<Ltl>) -> Self {
        items.into_iter().reduce(Ltl::or).unwrap_or(Ltl::False)
    }

    pub fn from_bool(e: &BoolExpr) -> Self {
        match e.nnf() {
            BoolExpr::Atom(a) => Ltl::Atom(a),
            BoolExpr::Const(true) => Ltl::True,
            BoolExpr::Const(false) => Ltl::False,
            BoolExpr::Not(c) => match *c {
                BoolExpr::Atom(a) => Ltl::NotAtom(a),
                _ => unreachable!("nnf leaves negation only on atoms"),
            },
            BoolExpr::And(cs) => Ltl::and_all(cs.iter().map(Ltl::from_bool).collect()),
            BoolExpr::Or(cs) => Ltl::or_all(cs.iter().map(Ltl::from_bool).collect()),
        }
    }

    /// NNF of the negation.
    pub fn negate(&self) -> Ltl {
        match self {
            Ltl::True => Ltl::False,
            Ltl::False => Ltl::True,
            Ltl::Atom(a) => Ltl::NotAtom(a.clone()),
            Ltl::NotAtom(a) => Ltl::Atom(a.clone()),
            Ltl::And(a, b) => Ltl::or(a.negate(), b.negate()),
            Ltl::Or(a, b) => Ltl::and(a.negate(), b.negate()),
            Ltl::Next(a) => Ltl::next(a.negate()),
            Ltl::Globally(a) => Ltl::finally(a.negate()),
            Ltl::Finally(a) => Ltl::globally(a.negate()),
            Ltl::Until(a, b) => Ltl::release(a.negate(), b.negate()),
            Ltl::Release(a, b) => Ltl::until(a.negate(), b.negate()),
        }
    }

    pub fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Ltl::True | Ltl::False => {}
            Ltl::Atom(a) | Ltl::NotAtom(a) => {
                out.insert(a.clone());
            }
            Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => a.collect_atoms(out),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) | Ltl::NotAtom(_) => 1,
            Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => 1 + a.size(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::True => f.write_str("true"),
            Ltl::False => f.write_str("false"),
            Ltl::Atom(a) => f.write_str(a),
            Ltl::NotAtom(a) => write!(f, "!{a}"),
            Ltl::And(a, b) => write!(f, "({a} & {b})"),
            Ltl::Or(a, b) => write!(f, "({a} | {b})"),
            Ltl::Next(a) => write!(f, "X({a})"),
            Ltl::Globally(a) => write!(f, "G({a})"),
            Ltl::Finally(a) => write!(f, "F({a})"),
            Ltl::Until(a, b) => write!(f, "({a} U {b})"),
            Ltl::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}
