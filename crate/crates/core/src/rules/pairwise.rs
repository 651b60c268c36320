//! Rule 4 (equivalence dedup) and Rule 5 (implication pruning) over pairs
//! sharing a clock.

use super::{Edits, RuleId, RuleOutcome};
use crate::assertion::{assertion_key, Assertion};
use crate::sat::{equivalent, expr_is_sat, implies};
use crate::temporal::{align, assertion_formula};

/// Unsatisfiable on its own: no trace satisfies the assertion.
pub fn is_falsum(a: &Assertion) -> bool {
    assertion_formula(a).is_ok_and(|f| expr_is_sat(&f) == Ok(false))
}

/// Index pairs `(i, j)` ordered by the ids of `set`.
fn id_ordered_pairs(set: &[Assertion]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&x, &y| set[x].id.cmp(&set[y].id));
    let mut pairs = Vec::new();
    for (p, &i) in order.iter().enumerate() {
        for &j in &order[p + 1..] {
            if set[i].clock == set[j].clock {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

pub fn apply_rule4(set: &[Assertion]) -> RuleOutcome {
    let mut edits = Edits::new(RuleId::R4EquivalenceDedup, set);
    let alignable: Vec<bool> = set.iter().map(|a| align(a).is_ok()).collect();
    let keys: Vec<_> = set.iter().map(assertion_key).collect();
    let mut gone = vec![false; set.len()];
    for (i, j) in id_ordered_pairs(set) {
        if gone[i] || gone[j] {
            continue;
        }
        let same = keys[i] == keys[j]
            || (alignable[i] && alignable[j] && equivalent(&set[i], &set[j]) == Ok(true));
        if !same {
            continue;
        }
        // i precedes j by id, so a tie drops j
        let drop = if set[i].atom_occurrences() > set[j].atom_occurrences() { i } else { j };
        gone[drop] = true;
        edits.remove(drop);
    }
    edits.finish()
}

pub fn apply_rule5(set: &[Assertion]) -> RuleOutcome {
    let mut edits = Edits::new(RuleId::R5ImplicationPrune, set);
    let alignable: Vec<bool> = set.iter().map(|a| align(a).is_ok()).collect();
    let mut falsum: Vec<Option<bool>> = vec![None; set.len()];
    let mut flagged = vec![false; set.len()];
    let mut gone = vec![false; set.len()];
    for (i, j) in id_ordered_pairs(set) {
        if gone[i] || gone[j] || !alignable[i] || !alignable[j] {
            continue;
        }
        let ij = implies(&set[i], &set[j]) == Ok(true);
        let ji = implies(&set[j], &set[i]) == Ok(true);
        let (strong, weak) = match (ij, ji) {
            (true, false) => (i, j),
            (false, true) => (j, i),
            _ => continue,
        };
        let is_f = *falsum[strong].get_or_insert_with(|| is_falsum(&set[strong]));
        if is_f {
            if !flagged[strong] {
                flagged[strong] = true;
                edits.flag(strong);
            }
            continue;
        }
        gone[weak] = true;
        edits.remove(weak);
    }
    edits.finish()
}
