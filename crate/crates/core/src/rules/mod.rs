//! The five set-to-set reduction rules and the lasso certificate that guards
//! every application.

mod certify;
mod intra;
mod merge;
mod pairwise;
pub mod simplify;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assertion::{print_assertion, Assertion};
use crate::util::hash16;

pub use certify::{certify, Certificate};
pub use intra::{apply_rule1, simplify_assertion, IntraResult};
pub use merge::{apply_rule2, apply_rule3};
pub use pairwise::{apply_rule4, apply_rule5, is_falsum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    R1IntraSimplify,
    R2PostConjunction,
    R3PreDisjunction,
    R4EquivalenceDedup,
    R5ImplicationPrune,
}

impl RuleId {
    pub const ALL: [RuleId; 5] = [
        RuleId::R1IntraSimplify,
        RuleId::R2PostConjunction,
        RuleId::R3PreDisjunction,
        RuleId::R4EquivalenceDedup,
        RuleId::R5ImplicationPrune,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn short(self) -> &'static str {
        ["R1", "R2", "R3", "R4", "R5"][self.index()]
    }

    pub fn apply(self, set: &[Assertion]) -> RuleOutcome {
        match self {
            RuleId::R1IntraSimplify => apply_rule1(set),
            RuleId::R2PostConjunction => apply_rule2(set),
            RuleId::R3PreDisjunction => apply_rule3(set),
            RuleId::R4EquivalenceDedup => apply_rule4(set),
            RuleId::R5ImplicationPrune => apply_rule5(set),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub rule: RuleId,
    pub new_set: Vec<Assertion>,
    pub removed: Vec<String>,
    pub rewritten: Vec<(String, String)>,
    pub merged: Vec<(Vec<String>, String)>,
    /// Assertions left in place that are unsatisfiable on their own.
    pub flagged_falsum: Vec<String>,
    pub delta_assertions: usize,
    pub delta_atoms: usize,
}

impl RuleOutcome {
    pub fn changed(&self) -> bool {
        !(self.removed.is_empty() && self.rewritten.is_empty() && self.merged.is_empty())
    }
}

pub fn total_atoms(set: &[Assertion]) -> usize {
    set.iter().map(Assertion::atom_occurrences).sum()
}

/// Id for an assertion created by `rule`: `R<n>__<hash16 of printed form>`,
/// with a numeric suffix if that id is taken.
pub(crate) fn fresh_id(rule: RuleId, a: &Assertion, taken: &mut HashSet<String>) -> String {
    let base = format!("{}__{}", rule.short(), hash16(&print_assertion(a)));
    let mut id = base.clone();
    let mut k = 2;
    while taken.contains(&id) {
        id = format!("{base}_{k}");
        k += 1;
    }
    taken.insert(id.clone());
    id
}

/// Collects edits of one rule pass and assembles the [`RuleOutcome`].
pub(crate) struct Edits<'a> {
    rule: RuleId,
    old: &'a [Assertion],
    taken: HashSet<String>,
    /// Replacement per old index: `None` deletes, `Some` replaces.
    replace: BTreeMap<usize, Option<Assertion>>,
    removed: Vec<String>,
    rewritten: Vec<(String, String)>,
    merged: Vec<(Vec<String>, String)>,
    flagged: Vec<String>,
}

impl<'a> Edits<'a> {
    pub fn new(rule: RuleId, old: &'a [Assertion]) -> Self {
        Self {
            rule,
            old,
            taken: old.iter().map(|a| a.id.clone()).collect(),
            replace: BTreeMap::new(),
            removed: Vec::new(),
            rewritten: Vec::new(),
            merged: Vec::new(),
            flagged: Vec::new(),
        }
    }

    pub fn remove(&mut self, i: usize) {
        self.replace.insert(i, None);
        self.removed.push(self.old[i].id.clone());
    }

    pub fn rewrite(&mut self, i: usize, a: Assertion) {
        let id = fresh_id(self.rule, &a, &mut self.taken);
        self.rewritten.push((self.old[i].id.clone(), id.clone()));
        self.replace.insert(i, Some(a.with_id(id)));
    }

    /// Replace `members` by `a`, placed where the first member was.
    pub fn merge(&mut self, members: &[usize], a: Assertion) {
        let id = fresh_id(self.rule, &a, &mut self.taken);
        self.merged
            .push((members.iter().map(|&i| self.old[i].id.clone()).collect(), id.clone()));
        for (k, &i) in members.iter().enumerate() {
            self.replace.insert(i, (k == 0).then(|| a.clone().with_id(id.clone())));
        }
    }

    pub fn flag(&mut self, i: usize) {
        self.flagged.push(self.old[i].id.clone());
    }

    pub fn finish(self) -> RuleOutcome {
        let new_set: Vec<Assertion> = self
            .old
            .iter()
            .enumerate()
            .filter_map(|(i, a)| match self.replace.get(&i) {
                None => Some(a.clone()),
                Some(r) => r.clone(),
            })
            .collect();
        let (before, after) = (total_atoms(self.old), total_atoms(&new_set));
        debug_assert!(new_set.len() <= self.old.len());
        RuleOutcome {
            rule: self.rule,
            delta_assertions: self.old.len() - new_set.len(),
            delta_atoms: before.saturating_sub(after),
            new_set,
            removed: self.removed,
            rewritten: self.rewritten,
            merged: self.merged,
            flagged_falsum: self.flagged,
        }
    }
}
