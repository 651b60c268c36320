//! Temporal endpoint alignment: fixed-offset, time-stamped propositional
//! obligations per concrete choice of range delays.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::assertion::{Assertion, BoolExpr, Delay, Sequence};
use crate::omega::Ltl;

pub const DEFAULT_EXPANSION_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("{count} range expansions exceed the cap of {cap}")]
    CapExceeded { count: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RebuildError {
    #[error("consequent bucket at offset {offset} precedes the antecedent end {anchor}")]
    Unrepresentable { offset: u32, anchor: u32 },
}

/// Name of atom `atom` observed `offset` cycles after the match start.
pub fn timed_name(atom: &str, offset: u32) -> String {
    format!("{atom}@{offset}")
}

/// Inverse of [`timed_name`].
pub fn split_timed_name(name: &str) -> Option<(&str, u32)> {
    let (atom, off) = name.rsplit_once('@')?;
    Some((atom, off.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimedLiteral {
    pub atom: String,
    pub offset: u32,
    pub positive: bool,
}

impl TimedLiteral {
    pub fn new(atom: impl Into<String>, offset: u32, positive: bool) -> Self {
        Self {
            atom: atom.into(),
            offset,
            positive,
        }
    }

    pub fn to_expr(&self) -> BoolExpr {
        let a = BoolExpr::Atom(timed_name(&self.atom, self.offset));
        if self.positive {
            a
        } else {
            BoolExpr::negated(a)
        }
    }
}

impl fmt::Display for TimedLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        write!(f, "{}@{}", self.atom, self.offset)
    }
}

/// One fixed-offset reading of an assertion. Buckets hold NNF expressions
/// over plain atom names; trivially true buckets are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimedExpansion {
    pub pre: BTreeMap<u32, BoolExpr>,
    pub post: BTreeMap<u32, BoolExpr>,
    /// Offset of the antecedent's final item (where the consequent starts).
    pub anchor: u32,
    pub max_offset: u32,
}

fn stamp(e: &BoolExpr, offset: u32) -> BoolExpr {
    e.map_atoms(&|a| timed_name(a, offset))
}

fn bucket_formula(buckets: &BTreeMap<u32, BoolExpr>) -> BoolExpr {
    BoolExpr::and_all(buckets.iter().map(|(&k, e)| stamp(e, k)).collect())
}

fn push_bucket(buckets: &mut BTreeMap<u32, BoolExpr>, offset: u32, e: &BoolExpr) {
    let e = e.nnf();
    if e.is_true() {
        return;
    }
    match buckets.remove(&offset) {
        None => {
            buckets.insert(offset, e);
        }
        Some(prev) => {
            let mut kids = prev.conjuncts();
            kids.extend(e.conjuncts());
            buckets.insert(offset, BoolExpr::and_all(kids));
        }
    }
}

impl TimedExpansion {
    /// Antecedent as one expression over timed atoms.
    pub fn pre_formula(&self) -> BoolExpr {
        bucket_formula(&self.pre)
    }

    pub fn post_formula(&self) -> BoolExpr {
        bucket_formula(&self.post)
    }

    /// `pre -> post` over timed atoms.
    pub fn formula(&self) -> BoolExpr {
        BoolExpr::Or(vec![BoolExpr::negated(self.pre_formula()), self.post_formula()])
    }

    fn from_offsets(pre_items: &[(u32, &BoolExpr)], post_items: &[(u32, &BoolExpr)]) -> Self {
        let mut pre = BTreeMap::new();
        let mut post = BTreeMap::new();
        for &(k, e) in pre_items {
            push_bucket(&mut pre, k, e);
        }
        for &(k, e) in post_items {
            push_bucket(&mut post, k, e);
        }
        let anchor = pre_items.last().map_or(0, |p| p.0);
        let max_offset = post_items
            .iter()
            .chain(pre_items)
            .map(|p| p.0)
            .max()
            .unwrap_or(0);
        Self {
            pre,
            post,
            anchor,
            max_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionSet {
    pub expansions: Vec<TimedExpansion>,
}

impl ExpansionSet {
    pub fn len(&self) -> usize {
        self.expansions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expansions.is_empty()
    }

    /// Conjunction of `pre -> post` over every expansion.
    pub fn formula(&self) -> BoolExpr {
        BoolExpr::and_all(self.expansions.iter().map(TimedExpansion::formula).collect())
    }
}

/// All concrete offset vectors for `delays`, lexicographic by delay index.
fn offset_choices(delays: &[Delay]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for d in delays {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (d.lo()..=d.hi()).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn place<'a>(s: &'a Sequence, start: u32, delays: &[u32]) -> Vec<(u32, &'a BoolExpr)> {
    let mut at = start;
    let mut out = vec![(at, &s.head)];
    for ((_, e), d) in s.tail.iter().zip(delays) {
        at += d;
        out.push((at, e));
    }
    out
}

pub fn align(a: &Assertion) -> Result<ExpansionSet, AlignError> {
    align_with_cap(a, DEFAULT_EXPANSION_CAP)
}

/// Expand `a` into one [`TimedExpansion`] per choice of range offsets.
/// Propositional assertions give an empty antecedent and the condition at
/// offset 0.
pub fn align_with_cap(a: &Assertion, cap: usize) -> Result<ExpansionSet, AlignError> {
    let count = a.expansion_count();
    if count > cap {
        return Err(AlignError::CapExceeded { count, cap });
    }
    if let Some(cond) = a.condition() {
        return Ok(ExpansionSet {
            expansions: vec![TimedExpansion::from_offsets(&[], &[(0, cond)])],
        });
    }
    let delays: Vec<Delay> = a.antecedent.delays().chain(a.consequent.delays()).collect();
    let split = a.antecedent.tail.len();
    let expansions = offset_choices(&delays)
        .into_iter()
        .map(|choice| {
            let pre = place(&a.antecedent, 0, &choice[..split]);
            let anchor = pre.last().unwrap().0;
            let post = place(&a.consequent, anchor, &choice[split..]);
            TimedExpansion::from_offsets(&pre, &post)
        })
        .collect();
    Ok(ExpansionSet { expansions })
}

/// `⋀ (pre -> post)` over all expansions, as an expression over timed atoms.
pub fn assertion_formula(a: &Assertion) -> Result<BoolExpr, AlignError> {
    Ok(align(a)?.formula())
}

fn bucket_sequence(buckets: &BTreeMap<u32, BoolExpr>, from: u32) -> Sequence {
    let mut items = buckets.range(from..);
    let mut seq = match buckets.get(&from) {
        Some(e) => {
            items.next();
            Sequence::single(e.clone())
        }
        None => Sequence::single(BoolExpr::Const(true)),
    };
    let mut at = from;
    for (&k, e) in items {
        seq.tail.push((Delay::fixed(k - at), e.clone()));
        at = k;
    }
    seq
}

/// Re-encode one expansion as a fixed-delay implication. The antecedent ends
/// at its last non-trivial bucket.
pub fn rebuild(
    exp: &TimedExpansion,
    clock: Option<&str>,
    id: &str,
) -> Result<Assertion, RebuildError> {
    let anchor = exp.pre.keys().next_back().copied().unwrap_or(0);
    if let Some(&offset) = exp.post.keys().next() {
        if offset < anchor {
            return Err(RebuildError::Unrepresentable { offset, anchor });
        }
    }
    Ok(Assertion::implication(
        id,
        clock.map(str::to_string),
        bucket_sequence(&exp.pre, 0),
        bucket_sequence(&exp.post, anchor),
    ))
}

fn bucket_ltl(buckets: &BTreeMap<u32, BoolExpr>, negate: bool) -> Vec<Ltl> {
    buckets
        .iter()
        .map(|(&k, e)| {
            let e = if negate { BoolExpr::negated(e.clone()) } else { e.clone() };
            Ltl::next_n(k, Ltl::from_bool(&e))
        })
        .collect()
}

/// `G(⋀_expansions (enc(pre) -> enc(post)))` with `enc` mapping a bucket
/// at offset `k` to `X^k`.
pub fn to_ltl(a: &Assertion) -> Result<Ltl, AlignError> {
    let set = align(a)?;
    let body = set
        .expansions
        .iter()
        .map(|x| {
            let mut disj = bucket_ltl(&x.pre, true);
            disj.push(Ltl::and_all(bucket_ltl(&x.post, false)));
            Ltl::or_all(disj)
        })
        .collect();
    Ok(Ltl::globally(Ltl::and_all(body)))
}
