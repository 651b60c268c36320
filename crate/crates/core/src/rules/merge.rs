//! Rule 2 (common antecedent, conjoined consequents) and Rule 3 (common
//! consequent, disjoined antecedents).

use std::collections::BTreeMap;

use super::{Edits, RuleId, RuleOutcome};
use crate::assertion::{
    canonical_key, normalize, normalize_sequence, sequence_key, Assertion, AssertionKind, BoolExpr, CanonicalKey,
    Delay, Sequence,
};
use crate::temporal::DEFAULT_EXPANSION_CAP;

/// Group indices by key, groups in order of first appearance.
fn group_by<K: Ord>(set: &[Assertion], key: impl Fn(&Assertion) -> Option<K>) -> Vec<Vec<usize>> {
    let mut slot: BTreeMap<K, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, a) in set.iter().enumerate() {
        let Some(k) = key(a) else { continue };
        let g = *slot.entry(k).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Conjunction of fixed-delay sequences aligned at their heads.
fn conjoin_sequences<'a>(seqs: impl Iterator<Item = &'a Sequence>) -> Sequence {
    let mut buckets: BTreeMap<u32, Vec<BoolExpr>> = BTreeMap::new();
    for s in seqs {
        let mut at = 0;
        buckets.entry(0).or_default().push(s.head.clone());
        for (d, e) in &s.tail {
            at += d.lo();
            buckets.entry(at).or_default().push(e.clone());
        }
    }
    let mut items: BTreeMap<u32, BoolExpr> = buckets
        .into_iter()
        .map(|(k, v)| (k, normalize(&BoolExpr::and_all(v))))
        .filter(|(_, e)| !e.is_true())
        .collect();
    let head = items.remove(&0).unwrap_or(BoolExpr::Const(true));
    let mut seq = Sequence::single(head);
    let mut at = 0;
    for (k, e) in items {
        seq.tail.push((Delay::fixed(k - at), e));
        at = k;
    }
    seq
}

pub fn apply_rule2(set: &[Assertion]) -> RuleOutcome {
    let mut edits = Edits::new(RuleId::R2PostConjunction, set);
    let groups = group_by(set, |a| {
        let mergeable = a.is_propositional() || a.consequent.is_fixed();
        mergeable.then(|| (a.clock.clone(), a.kind, sequence_key(&a.antecedent)))
    });
    for g in groups.into_iter().filter(|g| g.len() >= 2) {
        let first = &set[g[0]];
        let merged = match first.kind {
            AssertionKind::Propositional => Assertion::propositional(
                "",
                first.clock.clone(),
                normalize(&BoolExpr::and_all(g.iter().map(|&i| set[i].consequent.head.clone()).collect())),
            ),
            AssertionKind::Implication => Assertion::implication(
                "",
                first.clock.clone(),
                first.antecedent.clone(),
                conjoin_sequences(g.iter().map(|&i| &set[i].consequent)),
            ),
        };
        edits.merge(&g, merged);
    }
    edits.finish()
}

fn item_keys(s: &Sequence) -> Vec<CanonicalKey> {
    s.items().map(canonical_key).collect()
}

/// Antecedent covering both `x` and `y` (same consequent assumed), if one
/// exists under the structural conditions of Rule 3.
fn merge_antecedents(x: &Sequence, y: &Sequence) -> Option<Sequence> {
    let (x, y) = (normalize_sequence(x), normalize_sequence(y));
    if x.len() != y.len() {
        return None;
    }
    let (kx, ky) = (item_keys(&x), item_keys(&y));
    let (dx, dy): (Vec<Delay>, Vec<Delay>) = (x.delays().collect(), y.delays().collect());
    if dx == dy {
        let diff: Vec<usize> = (0..kx.len()).filter(|&k| kx[k] != ky[k]).collect();
        return match diff.as_slice() {
            [] => Some(x),
            [k] => {
                let (ex, ey) = (x.items().nth(*k)?, y.items().nth(*k)?);
                let joined = normalize(&BoolExpr::Or(vec![ex.clone(), ey.clone()]));
                let mut out = x.clone();
                if *k == 0 {
                    out.head = joined;
                } else {
                    out.tail[k - 1].1 = joined;
                }
                Some(out)
            }
            _ => None,
        };
    }
    if kx != ky {
        return None;
    }
    let diff: Vec<usize> = (0..dx.len()).filter(|&k| dx[k] != dy[k]).collect();
    let [p] = diff.as_slice() else { return None };
    let (a, b) = (dx[*p], dy[*p]);
    // overlapping or adjacent ranges compact into one
    if a.lo().max(b.lo()) > a.hi().min(b.hi()) + 1 {
        return None;
    }
    let mut out = x.clone();
    out.tail[*p].0 = Delay::new(a.lo().min(b.lo()), a.hi().max(b.hi()))?;
    Some(out)
}

pub fn apply_rule3(set: &[Assertion]) -> RuleOutcome {
    let mut edits = Edits::new(RuleId::R3PreDisjunction, set);
    let groups = group_by(set, |a| {
        (!a.is_propositional()).then(|| (a.clock.clone(), sequence_key(&a.consequent)))
    });
    for g in groups.into_iter().filter(|g| g.len() >= 2) {
        let mut work: Vec<(Vec<usize>, Assertion)> = g.iter().map(|&i| (vec![i], set[i].clone())).collect();
        'search: loop {
            for p in 0..work.len() {
                for q in p + 1..work.len() {
                    let Some(ante) = merge_antecedents(&work[p].1.antecedent, &work[q].1.antecedent) else {
                        continue;
                    };
                    let merged = Assertion::implication(
                        "",
                        work[p].1.clock.clone(),
                        ante,
                        work[p].1.consequent.clone(),
                    );
                    if merged.expansion_count() > DEFAULT_EXPANSION_CAP {
                        continue;
                    }
                    let (members, _) = work.remove(q);
                    work[p].0.extend(members);
                    work[p].1 = merged;
                    continue 'search;
                }
            }
            break;
        }
        for (mut members, a) in work {
            if members.len() >= 2 {
                members.sort_unstable();
                edits.merge(&members, a);
            }
        }
    }
    edits.finish()
}
