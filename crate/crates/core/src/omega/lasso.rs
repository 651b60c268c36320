use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Ltl;
use crate::util::{mix_seed, stable_hash, BitSet};

/// Set of atoms that hold in one cycle, indexed by a pool's atom list.
pub type Letter = BitSet;

/// Ultimately periodic word `prefix · loop^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub prefix: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl Lasso {
    /// Panics if `cycle` is empty.
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Self {
        assert!(!cycle.is_empty(), "lasso loop must be non-empty");
        Self { prefix, cycle }
    }

    /// Positions `0 .. prefix + loop`; the last one steps back to the loop head.
    pub fn positions(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn letter(&self, i: usize) -> &Letter {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[i - self.prefix.len()]
        }
    }

    pub fn successor(&self, i: usize) -> usize {
        if i + 1 < self.positions() {
            i + 1
        } else {
            self.prefix.len()
        }
    }

    fn fingerprint_into(&self, out: &mut Vec<u8>) {
        for (tag, part) in [(b'p', &self.prefix), (b'l', &self.cycle)] {
            out.push(tag);
            for letter in part {
                for i in letter.ones() {
                    out.extend_from_slice(&(i as u32).to_le_bytes());
                }
                out.push(b';');
            }
        }
    }
}

/// Length bounds for sampled lassos (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoBounds {
    pub prefix_min: usize,
    pub prefix_max: usize,
    pub loop_min: usize,
    pub loop_max: usize,
}

impl Default for LassoBounds {
    fn default() -> Self {
        Self {
            prefix_min: 0,
            prefix_max: 4,
            loop_min: 1,
            loop_max: 4,
        }
    }
}

fn random_letter(rng: &mut ChaCha8Rng, width: usize) -> Letter {
    let mut l = BitSet::new(width);
    for i in 0..width {
        l.set(i, rng.random_bool(0.5));
    }
    l
}

/// `count` distinct lassos over `width` atoms. Duplicates are re-drawn up to
/// a bounded number of attempts, so tiny alphabets may yield fewer.
pub fn sample_lassos(width: usize, count: usize, seed: u64, bounds: LassoBounds) -> Vec<Lasso> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(20).max(1);
    let loop_min = bounds.loop_min.max(1);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let p = rng.random_range(bounds.prefix_min..=bounds.prefix_max.max(bounds.prefix_min));
        let l = rng.random_range(loop_min..=bounds.loop_max.max(loop_min));
        let prefix = (0..p).map(|_| random_letter(&mut rng, width)).collect();
        let cycle = (0..l).map(|_| random_letter(&mut rng, width)).collect();
        let lasso = Lasso::new(prefix, cycle);
        if seen.insert(lasso.clone()) {
            out.push(lasso);
        }
    }
    out
}

/// Direct evaluation of `f` on `lam`, letters indexed by `atoms`. Atoms of
/// `f` missing from `atoms` read as false.
pub fn eval_on_lasso(f: &Ltl, lam: &Lasso, atoms: &[String]) -> bool {
    eval_positions(f, lam, atoms)[0]
}

fn eval_positions(f: &Ltl, lam: &Lasso, atoms: &[String]) -> Vec<bool> {
    let n = lam.positions();
    let succ: Vec<usize> = (0..n).map(|i| lam.successor(i)).collect();
    let atom_at = |name: &str| -> Vec<bool> {
        match atoms.iter().position(|a| a == name) {
            Some(k) => (0..n).map(|i| lam.letter(i).get(k)).collect(),
            None => vec![false; n],
        }
    };
    // least (`init = false`) or greatest (`init = true`) fixpoint of
    // v[i] = step(i, v[succ i]), iterated backwards until stable
    let fix = |init: bool, step: &dyn Fn(usize, bool) -> bool| -> Vec<bool> {
        let mut v = vec![init; n];
        loop {
            let mut changed = false;
            for i in (0..n).rev() {
                let nv = step(i, v[succ[i]]);
                if nv != v[i] {
                    v[i] = nv;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    };
    match f {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(a) => atom_at(a),
        Ltl::NotAtom(a) => atom_at(a).into_iter().map(|b| !b).collect(),
        Ltl::And(a, b) | Ltl::Or(a, b) => {
            let (x, y) = (eval_positions(a, lam, atoms), eval_positions(b, lam, atoms));
            let and = matches!(f, Ltl::And(..));
            x.iter().zip(&y).map(|(p, q)| if and { *p && *q } else { *p || *q }).collect()
        }
        Ltl::Next(a) => {
            let x = eval_positions(a, lam, atoms);
            succ.iter().map(|&s| x[s]).collect()
        }
        Ltl::Globally(a) => {
            let x = eval_positions(a, lam, atoms);
            fix(true, &|i, nxt| x[i] && nxt)
        }
        Ltl::Finally(a) => {
            let x = eval_positions(a, lam, atoms);
            fix(false, &|i, nxt| x[i] || nxt)
        }
        Ltl::Until(a, b) => {
            let (x, y) = (eval_positions(a, lam, atoms), eval_positions(b, lam, atoms));
            fix(false, &|i, nxt| y[i] || (x[i] && nxt))
        }
        Ltl::Release(a, b) => {
            let (x, y) = (eval_positions(a, lam, atoms), eval_positions(b, lam, atoms));
            fix(true, &|i, nxt| y[i] && (x[i] || nxt))
        }
    }
}

/// A shared sample of lassos over a fixed, sorted atom list.
#[derive(Clone, Debug)]
pub struct LassoPool {
    pub atoms: Vec<String>,
    pub lassos: Vec<Lasso>,
    fingerprint: u64,
}

impl LassoPool {
    /// Pool seeded from `(seed, atoms)` so every caller sampling the same
    /// atom set with the same seed sees the same lassos.
    pub fn sample(atoms: &BTreeSet<String>, count: usize, seed: u64, bounds: LassoBounds) -> Self {
        let atoms: Vec<String> = atoms.iter().cloned().collect();
        let lassos = sample_lassos(atoms.len(), count, mix_seed(seed, &atoms), bounds);
        Self::from_lassos(atoms, lassos)
    }

    pub fn from_lassos(atoms: Vec<String>, lassos: Vec<Lasso>) -> Self {
        let mut bytes = Vec::new();
        for a in &atoms {
            bytes.extend_from_slice(a.as_bytes());
            bytes.push(0);
        }
        for l in &lassos {
            l.fingerprint_into(&mut bytes);
        }
        Self {
            fingerprint: stable_hash(&bytes),
            atoms,
            lassos,
        }
    }

    pub fn len(&self) -> usize {
        self.lassos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lassos.is_empty()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Evaluate `f` on every lasso with the direct oracle.
    pub fn eval(&self, f: &Ltl) -> BitSet {
        let mut bits = BitSet::new(self.len());
        for (i, l) in self.lassos.iter().enumerate() {
            bits.set(i, eval_on_lasso(f, l, &self.atoms));
        }
        bits
    }
}
