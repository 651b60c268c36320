//! LTL over ultimately periodic words: Büchi construction, lasso sampling,
//! acceptance and the accepted-set Jaccard similarity.

mod buchi;
mod lasso;
mod ltl;

use thiserror::Error;

pub use buchi::{ltl_to_buchi, BuchiAutomaton, Guard, MAX_AUTOMATON_ATOMS, MAX_TABLEAU_NODES};
pub use lasso::{eval_on_lasso, sample_lassos, Lasso, LassoBounds, LassoPool, Letter};
pub use ltl::Ltl;

use crate::util::BitSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OmegaError {
    #[error("formula uses {used} atoms, automaton construction is limited to {limit}")]
    TooManyAtoms { used: usize, limit: usize },
    #[error("tableau exceeded {0} states")]
    TooManyStates(usize),
    #[error("acceptance vectors come from different lasso pools")]
    PoolMismatch,
    #[error("atom `{0}` is not in the lasso pool")]
    AtomNotInPool(String),
}

/// Accepted subset of a lasso pool; bit `i` is lasso `i` of the pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcceptanceVector {
    pub pool: u64,
    pub bits: BitSet,
}

impl AcceptanceVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

pub fn acceptance_vector(aut: &BuchiAutomaton, pool: &LassoPool) -> Result<AcceptanceVector, OmegaError> {
    let index = aut
        .atoms
        .iter()
        .map(|a| {
            pool.atoms
                .iter()
                .position(|p| p == a)
                .map(Some)
                .ok_or_else(|| OmegaError::AtomNotInPool(a.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut bits = BitSet::new(pool.len());
    let safety = aut.is_safety();
    for (i, l) in pool.lassos.iter().enumerate() {
        let acc = if safety {
            aut.accepts_safety(l, &index)
        } else {
            aut.accepts_product(l, &index)
        };
        bits.set(i, acc);
    }
    Ok(AcceptanceVector {
        pool: pool.fingerprint(),
        bits,
    })
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets are identical (1.0).
pub fn jaccard(v1: &AcceptanceVector, v2: &AcceptanceVector) -> Result<f64, OmegaError> {
    if v1.pool != v2.pool || v1.len() != v2.len() {
        return Err(OmegaError::PoolMismatch);
    }
    Ok(v1.bits.jaccard(&v2.bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn letter(bits: &[bool]) -> Letter {
        let mut l = BitSet::new(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            l.set(i, b);
        }
        l
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn globally_is_one_state() {
        let aut = ltl_to_buchi(&Ltl::globally(Ltl::atom("a"))).unwrap();
        assert_eq!(aut.num_states(), 1);
        assert!(aut.accepting[0]);
        assert_eq!(aut.transitions[0], vec![(Guard { pos: 1, neg: 0 }, 0)]);
        let a = names(&["a"]);
        assert!(aut.accepts(&Lasso::new(vec![], vec![letter(&[true])]), &a));
        assert!(!aut.accepts(&Lasso::new(vec![], vec![letter(&[false])]), &a));
    }

    #[test]
    fn finally_examples() {
        let aut = ltl_to_buchi(&Ltl::finally(Ltl::atom("a"))).unwrap();
        let a = names(&["a"]);
        assert!(aut.accepts(&Lasso::new(vec![letter(&[true])], vec![letter(&[false])]), &a));
        assert!(aut.accepts(&Lasso::new(vec![], vec![letter(&[false]), letter(&[true])]), &a));
        assert!(!aut.accepts(&Lasso::new(vec![letter(&[false])], vec![letter(&[false])]), &a));
    }

    #[test]
    fn response_examples() {
        let f = Ltl::globally(Ltl::or(Ltl::not_atom("a"), Ltl::next(Ltl::atom("b"))));
        let aut = ltl_to_buchi(&f).unwrap();
        let ab = names(&["a", "b"]);
        let bad = Lasso::new(vec![], vec![letter(&[true, false])]);
        let idle = Lasso::new(vec![], vec![letter(&[false, false])]);
        assert!(!aut.accepts(&bad, &ab));
        assert!(aut.accepts(&idle, &ab));
        assert!(!eval_on_lasso(&f, &bad, &ab));
        assert!(eval_on_lasso(&f, &idle, &ab));
    }

    #[test]
    fn constant_automata() {
        let pool = LassoPool::sample(&BTreeSet::from(["a".to_string()]), 20, 3, LassoBounds::default());
        let all = acceptance_vector(&ltl_to_buchi(&Ltl::True).unwrap(), &pool).unwrap();
        assert_eq!(all.bits.count_ones(), pool.len());
        let contradiction = Ltl::globally(Ltl::and(Ltl::atom("a"), Ltl::not_atom("a")));
        let none = acceptance_vector(&ltl_to_buchi(&contradiction).unwrap(), &pool).unwrap();
        assert_eq!(none.bits.count_ones(), 0);
    }

    #[test]
    fn acceptance_vector_bits() {
        let pool = LassoPool::from_lassos(
            names(&["a"]),
            vec![
                Lasso::new(vec![], vec![letter(&[true])]),
                Lasso::new(vec![], vec![letter(&[false])]),
            ],
        );
        let v = acceptance_vector(&ltl_to_buchi(&Ltl::globally(Ltl::atom("a"))).unwrap(), &pool).unwrap();
        assert_eq!(v.bits.ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn jaccard_cases() {
        let mk = |pool: u64, on: &[usize], n: usize| {
            let mut bits = BitSet::new(n);
            on.iter().for_each(|&i| bits.set(i, true));
            AcceptanceVector { pool, bits }
        };
        assert_eq!(jaccard(&mk(1, &[0], 2), &mk(1, &[0, 1], 2)).unwrap(), 0.5);
        assert_eq!(jaccard(&mk(1, &[0], 2), &mk(1, &[1], 2)).unwrap(), 0.0);
        assert_eq!(jaccard(&mk(1, &[], 2), &mk(1, &[], 2)).unwrap(), 1.0);
        assert_eq!(jaccard(&mk(1, &[0], 2), &mk(2, &[0], 2)), Err(OmegaError::PoolMismatch));
    }

    #[test]
    fn atom_budget() {
        let f = Ltl::and_all((0..17).map(|i| Ltl::atom(format!("p{i}"))).collect());
        assert!(matches!(ltl_to_buchi(&f), Err(OmegaError::TooManyAtoms { used: 17, .. })));
    }
}
