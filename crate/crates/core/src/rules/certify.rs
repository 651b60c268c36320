//! Conjunction-level equivalence check of two assertion sets on sampled lassos.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::assertion::{atomic_propositions, Assertion};
use crate::omega::{eval_on_lasso, LassoBounds, LassoPool, Ltl};
use crate::temporal::to_ltl;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// Lassos evaluated.
    pub samples: usize,
    pub passed: bool,
    /// Some changed assertion had no LTL form, so nothing was checked.
    pub skipped: bool,
    /// Index of the first disagreeing lasso.
    pub counterexample: Option<usize>,
}

impl Certificate {
    fn trivial() -> Self {
        Self {
            samples: 0,
            passed: true,
            skipped: false,
            counterexample: None,
        }
    }
}

/// Compare `⋀ old` and `⋀ new` on `samples` shared lassos. Assertions present
/// unchanged on both sides are evaluated once as a common context.
pub fn certify(old: &[Assertion], new: &[Assertion], samples: usize, seed: u64) -> Certificate {
    let new_by_id: HashMap<&str, &Assertion> = new.iter().map(|a| (a.id.as_str(), a)).collect();
    let old_by_id: HashMap<&str, &Assertion> = old.iter().map(|a| (a.id.as_str(), a)).collect();
    let unchanged = |a: &Assertion, other: &HashMap<&str, &Assertion>| other.get(a.id.as_str()) == Some(&a);
    let old_only: Vec<&Assertion> = old.iter().filter(|a| !unchanged(a, &new_by_id)).collect();
    let new_only: Vec<&Assertion> = new.iter().filter(|a| !unchanged(a, &old_by_id)).collect();
    if old_only.is_empty() && new_only.is_empty() {
        return Certificate::trivial();
    }
    let convert = |xs: &[&Assertion]| xs.iter().map(|a| to_ltl(a).ok()).collect::<Option<Vec<Ltl>>>();
    let (Some(old_f), Some(new_f)) = (convert(&old_only), convert(&new_only)) else {
        return Certificate {
            skipped: true,
            ..Certificate::trivial()
        };
    };
    // opaque common members are left out; equivalence under a weaker context
    // implies equivalence under the full one
    let common: Vec<Ltl> = old
        .iter()
        .filter(|a| unchanged(a, &new_by_id))
        .filter_map(|a| to_ltl(a).ok())
        .collect();
    let mut atoms: BTreeSet<String> = BTreeSet::new();
    for a in old_only.iter().chain(&new_only) {
        atoms.extend(atomic_propositions(a));
    }
    for f in &common {
        f.collect_atoms(&mut atoms);
    }
    let pool = LassoPool::sample(&atoms, samples.max(1), seed, LassoBounds::default());
    let holds = |fs: &[Ltl], l| fs.iter().all(|f| eval_on_lasso(f, l, &pool.atoms));
    for (i, l) in pool.lassos.iter().enumerate() {
        if !holds(&common, l) {
            continue;
        }
        if holds(&old_f, l) != holds(&new_f, l) {
            return Certificate {
                samples: pool.len(),
                passed: false,
                skipped: false,
                counterexample: Some(i),
            };
        }
    }
    Certificate {
        samples: pool.len(),
        passed: true,
        skipped: false,
        counterexample: None,
    }
}
