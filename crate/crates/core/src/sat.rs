//! Propositional decision procedures over time-stamped atoms.
//!
//! A small complete DPLL solver (unit propagation plus pure-literal
//! elimination, no learning) behind entailment, equivalence and implication
//! queries. Non-CNF input goes through a Tseitin encoding.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::assertion::{Assertion, BoolExpr};
use crate::temporal::{self, AlignError, TimedLiteral};
use crate::util::BitSet;

/// Default cap on distinct timed atoms per query.
pub const DEFAULT_VARIABLE_BUDGET: usize = 64;
/// Largest atom count accepted by [`truth_table_sat_set`].
pub const TRUTH_TABLE_MAX_ATOMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("query uses {used} distinct atoms, budget is {budget}")]
    VariableBudget { used: usize, budget: usize },
    #[error("truth table over {0} atoms refused (limit {TRUTH_TABLE_MAX_ATOMS})")]
    TruthTableTooLarge(usize),
    #[error("assertion `{id}` cannot be expanded: {source}")]
    NotAlignable {
        id: String,
        #[source]
        source: AlignError,
    },
}

/// Literal: positive or negative 1-based variable index.
pub type Lit = i32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    pub clauses: Vec<Vec<Lit>>,
    /// Named (non-auxiliary) variables.
    pub variables: BTreeMap<String, u32>,
    num_vars: u32,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn var(&mut self, name: &str) -> u32 {
        if let Some(&v) = self.variables.get(name) {
            return v;
        }
        self.num_vars += 1;
        self.variables.insert(name.to_string(), self.num_vars);
        self.num_vars
    }

    /// Fresh auxiliary variable (`_tX` in the Tseitin encoding; never named
    /// in `variables`).
    fn fresh(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }

    /// Tseitin-encode `e` and assert it.
    pub fn assert_expr(&mut self, e: &BoolExpr) {
        match fold_constants(e) {
            BoolExpr::Const(true) => {}
            BoolExpr::Const(false) => self.add_clause(Vec::new()),
            BoolExpr::And(cs) => {
                for c in &cs {
                    self.assert_expr(c);
                }
            }
            other => {
                let l = self.encode(&other);
                self.add_clause(vec![l]);
            }
        }
    }

    fn encode(&mut self, e: &BoolExpr) -> Lit {
        match e {
            BoolExpr::Atom(a) => self.var(a) as Lit,
            BoolExpr::Not(c) => -self.encode(c),
            BoolExpr::And(cs) => {
                let lits: Vec<Lit> = cs.iter().map(|c| self.encode(c)).collect();
                let t = self.fresh() as Lit;
                let mut big = vec![t];
                for &l in &lits {
                    self.add_clause(vec![-t, l]);
                    big.push(-l);
                }
                self.add_clause(big);
                t
            }
            BoolExpr::Or(cs) => {
                let lits: Vec<Lit> = cs.iter().map(|c| self.encode(c)).collect();
                let t = self.fresh() as Lit;
                let mut big = vec![-t];
                for &l in &lits {
                    self.add_clause(vec![t, -l]);
                    big.push(l);
                }
                self.add_clause(big);
                t
            }
            BoolExpr::Const(_) => unreachable!("constants are folded before encoding"),
        }
    }
}

/// Full constant folding (annihilators included).
fn fold_constants(e: &BoolExpr) -> BoolExpr {
    match e {
        BoolExpr::Atom(_) | BoolExpr::Const(_) => e.clone(),
        BoolExpr::Not(c) => match fold_constants(c) {
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            other => BoolExpr::negated(other),
        },
        BoolExpr::And(cs) | BoolExpr::Or(cs) => {
            let is_and = matches!(e, BoolExpr::And(_));
            let mut kids = Vec::with_capacity(cs.len());
            for c in cs {
                match fold_constants(c) {
                    BoolExpr::Const(b) if b == is_and => {}
                    BoolExpr::Const(b) => return BoolExpr::Const(b),
                    other => kids.push(other),
                }
            }
            if is_and {
                BoolExpr::and_all(kids)
            } else {
                BoolExpr::or_all(kids)
            }
        }
    }
}

/// Decide satisfiability. Refuses formulas with more named variables than
/// `budget`.
pub fn is_sat_with_budget(f: &CnfFormula, budget: usize) -> Result<bool, SatError> {
    if f.variables.len() > budget {
        return Err(SatError::VariableBudget {
            used: f.variables.len(),
            budget,
        });
    }
    if f.clauses.iter().any(Vec::is_empty) {
        return Ok(false);
    }
    let mut assign = vec![0i8; f.num_vars as usize + 1];
    let mut named = vec![false; f.num_vars as usize + 1];
    for &v in f.variables.values() {
        named[v as usize] = true;
    }
    Ok(dpll(&f.clauses, &named, &mut assign))
}

pub fn is_sat(f: &CnfFormula) -> Result<bool, SatError> {
    is_sat_with_budget(f, DEFAULT_VARIABLE_BUDGET)
}

fn value(assign: &[i8], l: Lit) -> i8 {
    let v = assign[l.unsigned_abs() as usize];
    if l > 0 {
        v
    } else {
        -v
    }
}

fn set(assign: &mut [i8], l: Lit) {
    assign[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
}

/// `named` marks input variables; the Tseitin auxiliaries follow from them
/// by propagation, so branching prefers inputs.
fn dpll(clauses: &[Vec<Lit>], named: &[bool], assign: &mut Vec<i8>) -> bool {
    loop {
        // unit propagation
        let mut changed = false;
        for c in clauses {
            let mut unassigned = None;
            let mut open = 0;
            let mut satisfied = false;
            for &l in c {
                match value(assign, l) {
                    1 => {
                        satisfied = true;
                        break;
                    }
                    0 => {
                        open += 1;
                        unassigned = Some(l);
                    }
                    _ => {}
                }
            }
            if satisfied {
                continue;
            }
            match open {
                0 => return false,
                1 => {
                    set(assign, unassigned.unwrap());
                    changed = true;
                }
                _ => {}
            }
        }
        if changed {
            continue;
        }
        // pure literals among unsatisfied clauses
        let mut polarity = vec![0u8; assign.len()];
        let mut score = vec![[0u32; 2]; assign.len()];
        let mut any_open = false;
        for c in clauses {
            if c.iter().any(|&l| value(assign, l) == 1) {
                continue;
            }
            any_open = true;
            for &l in c {
                if value(assign, l) == 0 {
                    let v = l.unsigned_abs() as usize;
                    polarity[v] |= if l > 0 { 1 } else { 2 };
                    score[v][usize::from(l < 0)] += 1;
                }
            }
        }
        if !any_open {
            return true;
        }
        for (v, &p) in polarity.iter().enumerate() {
            if p == 1 || p == 2 {
                assign[v] = if p == 1 { 1 } else { -1 };
                changed = true;
            }
        }
        if changed {
            continue;
        }
        let branch = (0..polarity.len())
            .filter(|&v| polarity[v] != 0)
            .max_by_key(|&v| (named[v], score[v][0] + score[v][1], std::cmp::Reverse(v)));
        let Some(v) = branch else {
            return true;
        };
        let first = if score[v][0] >= score[v][1] { 1i8 } else { -1 };
        for choice in [first, -first] {
            let mut trial = assign.clone();
            trial[v] = choice;
            if dpll(clauses, named, &mut trial) {
                *assign = trial;
                return true;
            }
        }
        return false;
    }
}

/// Satisfiability of an arbitrary boolean expression.
pub fn expr_is_sat(e: &BoolExpr) -> Result<bool, SatError> {
    let mut f = CnfFormula::new();
    f.assert_expr(e);
    is_sat(&f)
}

/// `pre |= conclusion`, decided as `Unsat(pre && !conclusion)`.
/// Conclusion conjuncts are checked one at a time; those already present as
/// premise conjuncts are skipped.
pub fn entails_expr(pre: &BoolExpr, conclusion: &BoolExpr) -> Result<bool, SatError> {
    let mut premises = Vec::new();
    flatten_and(pre, &mut premises);
    let mut goals = Vec::new();
    flatten_and(conclusion, &mut goals);
    let known: HashSet<&BoolExpr> = premises.iter().copied().collect();
    let pre = BoolExpr::And(premises.iter().map(|&e| e.clone()).collect());
    for g in goals.into_iter().filter(|g| !known.contains(g)) {
        let q = BoolExpr::And(vec![pre.clone(), BoolExpr::negated(g.clone())]);
        if expr_is_sat(&q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn flatten_and<'a>(e: &'a BoolExpr, out: &mut Vec<&'a BoolExpr>) {
    match e {
        BoolExpr::And(cs) => cs.iter().for_each(|c| flatten_and(c, out)),
        BoolExpr::Const(true) => {}
        _ => out.push(e),
    }
}

/// Whether the time-stamped antecedent forces the literal.
pub fn entails(pre: &BoolExpr, lit: &TimedLiteral) -> Result<bool, SatError> {
    entails_expr(pre, &lit.to_expr())
}

fn formula_of(a: &Assertion) -> Result<BoolExpr, SatError> {
    temporal::assertion_formula(a).map_err(|source| SatError::NotAlignable {
        id: a.id.clone(),
        source,
    })
}

/// `e1 => e2` over the time-stamped expansions of two assertions.
pub fn implies(e1: &Assertion, e2: &Assertion) -> Result<bool, SatError> {
    entails_expr(&formula_of(e1)?, &formula_of(e2)?)
}

/// Both implication directions hold.
pub fn equivalent(e1: &Assertion, e2: &Assertion) -> Result<bool, SatError> {
    let (f1, f2) = (formula_of(e1)?, formula_of(e2)?);
    Ok(entails_expr(&f1, &f2)? && entails_expr(&f2, &f1)?)
}

/// Equivalence of two assertion conjunctions over their time-stamped
/// expansions. Sound for the `G` semantics; `Ok(false)` may be a miss for
/// sets whose equivalence needs shifted instances.
pub fn set_equivalent(s1: &[Assertion], s2: &[Assertion]) -> Result<bool, SatError> {
    let conj = |s: &[Assertion]| -> Result<BoolExpr, SatError> {
        Ok(BoolExpr::and_all(s.iter().map(formula_of).collect::<Result<_, _>>()?))
    };
    let (f1, f2) = (conj(s1)?, conj(s2)?);
    Ok(entails_expr(&f1, &f2)? && entails_expr(&f2, &f1)?)
}

/// Satisfying assignments of `e` over `atoms`: bit `i` is set iff the
/// assignment where atom `j` takes bit `j` of `i` satisfies `e`.
pub fn truth_table_sat_set(e: &BoolExpr, atoms: &[String]) -> Result<BitSet, SatError> {
    let n = atoms.len();
    if n > TRUTH_TABLE_MAX_ATOMS {
        return Err(SatError::TruthTableTooLarge(n));
    }
    let index: BTreeMap<&str, usize> = atoms.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut out = BitSet::new(1 << n);
    for i in 0..(1usize << n) {
        let holds = e.eval(&|name: &str| index.get(name).is_some_and(|&j| i >> j & 1 == 1));
        out.set(i, holds);
    }
    Ok(out)
}
