use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Boolean condition over named signals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoolExpr {
    Atom(String),
    Const(bool),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn atom(name: impl Into<String>) -> Self {
        BoolExpr::Atom(name.into())
    }

    pub fn negated(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    /// Conjunction; empty is `1`, a single child is returned as is.
    pub fn and_all(mut children: Vec<BoolExpr>) -> Self {
        match children.len() {
            0 => BoolExpr::Const(true),
            1 => children.pop().unwrap(),
            _ => BoolExpr::And(children),
        }
    }

    /// Disjunction; empty is `0`, a single child is returned as is.
    pub fn or_all(mut children: Vec<BoolExpr>) -> Self {
        match children.len() {
            0 => BoolExpr::Const(false),
            1 => children.pop().unwrap(),
            _ => BoolExpr::Or(children),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, BoolExpr::Const(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, BoolExpr::Const(false))
    }

    pub fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Atom(a) => {
                out.insert(a.clone());
            }
            BoolExpr::Const(_) => {}
            BoolExpr::Not(c) => c.collect_atoms(out),
            BoolExpr::And(cs) | BoolExpr::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    /// Number of atom occurrences (constants excluded).
    pub fn atom_occurrences(&self) -> usize {
        match self {
            BoolExpr::Atom(_) => 1,
            BoolExpr::Const(_) => 0,
            BoolExpr::Not(c) => c.atom_occurrences(),
            BoolExpr::And(cs) | BoolExpr::Or(cs) => cs.iter().map(Self::atom_occurrences).sum(),
        }
    }

    pub fn eval(&self, value: &dyn Fn(&str) -> bool) -> bool {
        match self {
            BoolExpr::Atom(a) => value(a),
            BoolExpr::Const(b) => *b,
            BoolExpr::Not(c) => !c.eval(value),
            BoolExpr::And(cs) => cs.iter().all(|c| c.eval(value)),
            BoolExpr::Or(cs) => cs.iter().any(|c| c.eval(value)),
        }
    }

    /// Rename every atom.
    pub fn map_atoms(&self, f: &dyn Fn(&str) -> String) -> BoolExpr {
        match self {
            BoolExpr::Atom(a) => BoolExpr::Atom(f(a)),
            BoolExpr::Const(b) => BoolExpr::Const(*b),
            BoolExpr::Not(c) => BoolExpr::negated(c.map_atoms(f)),
            BoolExpr::And(cs) => BoolExpr::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            BoolExpr::Or(cs) => BoolExpr::Or(cs.iter().map(|c| c.map_atoms(f)).collect()),
        }
    }

    /// Negation normal form: negations only directly above atoms.
    pub fn nnf(&self) -> BoolExpr {
        self.nnf_with(false)
    }

    fn nnf_with(&self, negate: bool) -> BoolExpr {
        match self {
            BoolExpr::Atom(a) => {
                if negate {
                    BoolExpr::negated(BoolExpr::Atom(a.clone()))
                } else {
                    BoolExpr::Atom(a.clone())
                }
            }
            BoolExpr::Const(b) => BoolExpr::Const(*b != negate),
            BoolExpr::Not(c) => c.nnf_with(!negate),
            BoolExpr::And(cs) => {
                let kids = cs.iter().map(|c| c.nnf_with(negate)).collect();
                if negate {
                    BoolExpr::Or(kids)
                } else {
                    BoolExpr::And(kids)
                }
            }
            BoolExpr::Or(cs) => {
                let kids = cs.iter().map(|c| c.nnf_with(negate)).collect();
                if negate {
                    BoolExpr::And(kids)
                } else {
                    BoolExpr::Or(kids)
                }
            }
        }
    }

    /// Top-level conjuncts (the expression itself when it is not an `And`).
    pub fn conjuncts(&self) -> Vec<BoolExpr> {
        match self {
            BoolExpr::And(cs) => cs.iter().flat_map(|c| c.conjuncts()).collect(),
            BoolExpr::Const(true) => Vec::new(),
            other => vec![other.clone()],
        }
    }

    /// Whether the expression is a single (possibly negated) atom or a constant.
    pub fn is_literal(&self) -> bool {
        match self {
            BoolExpr::Atom(_) | BoolExpr::Const(_) => true,
            BoolExpr::Not(c) => matches!(**c, BoolExpr::Atom(_)),
            _ => false,
        }
    }
}

/// Cycle delay `##[lo:hi]`; a fixed delay has `lo == hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Delay {
    lo: u32,
    hi: u32,
}

impl Delay {
    pub fn new(lo: u32, hi: u32) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn fixed(n: u32) -> Self {
        Self { lo: n, hi: n }
    }

    pub fn lo(self) -> u32 {
        self.lo
    }

    pub fn hi(self) -> u32 {
        self.hi
    }

    pub fn is_fixed(self) -> bool {
        self.lo == self.hi
    }

    pub fn width(self) -> usize {
        (self.hi - self.lo) as usize + 1
    }

    pub fn plus(self, other: Delay) -> Delay {
        Delay {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_fixed() {
            write!(f, "##{}", self.lo)
        } else {
            write!(f, "##[{}:{}]", self.lo, self.hi)
        }
    }
}

/// `head ##d1 item1 ##d2 item2 ...`
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    pub head: BoolExpr,
    pub tail: Vec<(Delay, BoolExpr)>,
}

impl Sequence {
    pub fn single(head: BoolExpr) -> Self {
        Self {
            head,
            tail: Vec::new(),
        }
    }

    pub fn items(&self) -> impl Iterator<Item = &BoolExpr> {
        std::iter::once(&self.head).chain(self.tail.iter().map(|(_, e)| e))
    }

    pub fn delays(&self) -> impl Iterator<Item = Delay> + '_ {
        self.tail.iter().map(|(d, _)| *d)
    }

    pub fn len(&self) -> usize {
        1 + self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_fixed(&self) -> bool {
        self.delays().all(Delay::is_fixed)
    }

    /// Number of concrete offset choices over all range delays.
    pub fn expansion_count(&self) -> usize {
        self.delays()
            .map(Delay::width)
            .fold(1usize, |acc, w| acc.saturating_mul(w))
    }

    /// Append `delay other` to this sequence, splicing `other`'s items.
    pub fn concat(mut self, delay: Delay, other: Sequence) -> Sequence {
        self.tail.push((delay, other.head));
        self.tail.extend(other.tail);
        self
    }

    pub fn atom_occurrences(&self) -> usize {
        self.items().map(BoolExpr::atom_occurrences).sum()
    }

    pub fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        self.items().for_each(|e| e.collect_atoms(out));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssertionKind {
    Implication,
    Propositional,
}

/// A clocked implication `antecedent |-> consequent` or an invariant
/// boolean condition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub clock: Option<String>,
    pub antecedent: Sequence,
    pub consequent: Sequence,
    pub kind: AssertionKind,
}

impl Assertion {
    pub fn implication(
        id: impl Into<String>,
        clock: Option<String>,
        antecedent: Sequence,
        consequent: Sequence,
    ) -> Self {
        Self {
            id: id.into(),
            clock,
            antecedent,
            consequent,
            kind: AssertionKind::Implication,
        }
    }

    pub fn propositional(id: impl Into<String>, clock: Option<String>, expr: BoolExpr) -> Self {
        Self {
            id: id.into(),
            clock,
            antecedent: Sequence::single(BoolExpr::Const(true)),
            consequent: Sequence::single(expr),
            kind: AssertionKind::Propositional,
        }
    }

    pub fn is_propositional(&self) -> bool {
        self.kind == AssertionKind::Propositional
    }

    /// The invariant condition of a propositional assertion.
    pub fn condition(&self) -> Option<&BoolExpr> {
        self.is_propositional().then_some(&self.consequent.head)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn atom_occurrences(&self) -> usize {
        self.antecedent.atom_occurrences() + self.consequent.atom_occurrences()
    }

    pub fn expansion_count(&self) -> usize {
        self.antecedent
            .expansion_count()
            .saturating_mul(self.consequent.expansion_count())
    }
}

/// Distinct atom names used anywhere in the assertion.
pub fn atomic_propositions(a: &Assertion) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    a.antecedent.collect_atoms(&mut out);
    a.consequent.collect_atoms(&mut out);
    out
}

/// Whether `name` is a legal signal identifier.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
