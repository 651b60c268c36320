#![allow(dead_code)]

use std::collections::BTreeSet;

use asred::assertion::{atomic_propositions, parse_assertion, Assertion};
use asred::omega::{Lasso, LassoBounds, LassoPool, Letter, Ltl};
use asred::sat;
use asred::temporal::to_ltl;
use asred::util::BitSet;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reference semantics of `f` at position `i` of `l`, written straight from
/// the definitions: every future position of a lasso lies on the orbit of
/// `i`, which repeats after `positions()` steps.
pub fn holds_at(f: &Ltl, l: &Lasso, atoms: &[String], i: usize) -> bool {
    let n = l.positions();
    let orbit = |start: usize| {
        let mut out = Vec::with_capacity(n);
        let mut j = start;
        for _ in 0..n {
            out.push(j);
            j = l.successor(j);
        }
        out
    };
    let atom = |a: &str| atoms.iter().position(|x| x == a).is_some_and(|k| l.letter(i).get(k));
    match f {
        Ltl::True => true,
        Ltl::False => false,
        Ltl::Atom(a) => atom(a),
        Ltl::NotAtom(a) => !atom(a),
        Ltl::And(x, y) => holds_at(x, l, atoms, i) && holds_at(y, l, atoms, i),
        Ltl::Or(x, y) => holds_at(x, l, atoms, i) || holds_at(y, l, atoms, i),
        Ltl::Next(x) => holds_at(x, l, atoms, l.successor(i)),
        Ltl::Globally(x) => orbit(i).into_iter().all(|j| holds_at(x, l, atoms, j)),
        Ltl::Finally(x) => orbit(i).into_iter().any(|j| holds_at(x, l, atoms, j)),
        Ltl::Until(x, y) => {
            for j in orbit(i) {
                if holds_at(y, l, atoms, j) {
                    return true;
                }
                if !holds_at(x, l, atoms, j) {
                    return false;
                }
            }
            false
        }
        Ltl::Release(x, y) => {
            for j in orbit(i) {
                if !holds_at(y, l, atoms, j) {
                    return false;
                }
                if holds_at(x, l, atoms, j) {
                    return true;
                }
            }
            true
        }
    }
}

pub fn holds(f: &Ltl, l: &Lasso, atoms: &[String]) -> bool {
    holds_at(f, l, atoms, 0)
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn letter(bits: &[bool]) -> Letter {
    let mut l = BitSet::new(bits.len());
    for (i, &b) in bits.iter().enumerate() {
        l.set(i, b);
    }
    l
}

pub fn random_letter(rng: &mut ChaCha8Rng, width: usize) -> Letter {
    let bits: Vec<bool> = (0..width).map(|_| rng.random_bool(0.5)).collect();
    letter(&bits)
}

pub fn random_lasso(rng: &mut ChaCha8Rng, width: usize) -> Lasso {
    let p = rng.random_range(0..=4);
    let c = rng.random_range(1..=4);
    Lasso::new(
        (0..p).map(|_| random_letter(rng, width)).collect(),
        (0..c).map(|_| random_letter(rng, width)).collect(),
    )
}

pub fn random_ltl(rng: &mut ChaCha8Rng, atoms: &[String], depth: u32) -> Ltl {
    if depth == 0 || rng.random_bool(0.2) {
        let a = atoms.choose(rng).unwrap().clone();
        return match rng.random_range(0..10) {
            0 => Ltl::True,
            1 => Ltl::False,
            2..=5 => Ltl::Atom(a),
            _ => Ltl::NotAtom(a),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..7) {
        0 => Ltl::and(random_ltl(rng, atoms, d), random_ltl(rng, atoms, d)),
        1 => Ltl::or(random_ltl(rng, atoms, d), random_ltl(rng, atoms, d)),
        2 => Ltl::next(random_ltl(rng, atoms, d)),
        3 => Ltl::globally(random_ltl(rng, atoms, d)),
        4 => Ltl::finally(random_ltl(rng, atoms, d)),
        5 => Ltl::until(random_ltl(rng, atoms, d), random_ltl(rng, atoms, d)),
        _ => Ltl::release(random_ltl(rng, atoms, d), random_ltl(rng, atoms, d)),
    }
}

/// One sequence step: a `(lo, hi)` delay and the literals of its conjunction.
pub type Item = ((u32, u32), Vec<(usize, bool)>);

/// Structured assertion used to derive related variants before printing.
#[derive(Clone, Debug)]
pub struct Shape {
    pub pre: Vec<Item>,
    pub post: Vec<Item>,
}

const ATOMS: [&str; 4] = ["a", "b", "c", "d"];

fn lits(rng: &mut ChaCha8Rng, max: usize) -> Vec<(usize, bool)> {
    let k = rng.random_range(1..=max);
    (0..k).map(|_| (rng.random_range(0..4), rng.random_bool(0.7))).collect()
}

fn delay(rng: &mut ChaCha8Rng) -> (u32, u32) {
    let lo = rng.random_range(0..=3);
    if rng.random_bool(0.3) {
        (lo, rng.random_range(lo..=3))
    } else {
        (lo, lo)
    }
}

fn item_text(ls: &[(usize, bool)]) -> String {
    let parts: Vec<String> = ls
        .iter()
        .map(|&(k, pos)| format!("{}{}", if pos { "" } else { "!" }, ATOMS[k]))
        .collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(" && "))
    }
}

fn delay_text((lo, hi): (u32, u32)) -> String {
    if lo == hi {
        format!("##{lo}")
    } else {
        format!("##[{lo}:{hi}]")
    }
}

fn seq_text(items: &[Item], lead: bool) -> String {
    let mut s = String::new();
    for (i, (d, ls)) in items.iter().enumerate() {
        if i > 0 || lead {
            s.push_str(&delay_text(*d));
            s.push(' ');
        }
        s.push_str(&item_text(ls));
        s.push(' ');
    }
    s.trim_end().to_string()
}

impl Shape {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let np = rng.random_range(1..=3);
        let nq = rng.random_range(1..=(6 - np).min(2));
        let pre = (0..np).map(|_| (delay(rng), lits(rng, 2))).collect();
        let post = (0..nq).map(|_| (delay(rng), lits(rng, 2))).collect();
        Self { pre, post }
    }

    pub fn text(&self) -> String {
        let lead = self.post[0].0 != (0, 0);
        format!("{} |-> {}", seq_text(&self.pre, false), seq_text(&self.post, lead))
    }

    /// A related variant that gives the rules something to find.
    pub fn variant(&self, rng: &mut ChaCha8Rng) -> Self {
        let mut v = self.clone();
        match rng.random_range(0..7) {
            0 => {}
            1 => {
                let i = rng.random_range(0..v.pre.len());
                v.pre[i].1.push((rng.random_range(0..4), rng.random_bool(0.5)));
            }
            2 => {
                let i = rng.random_range(0..v.post.len());
                let l = v.post[i].1[0];
                v.post[i].1.push(l);
            }
            3 => {
                let i = rng.random_range(0..v.post.len());
                v.post[i].1 = lits(rng, 2);
            }
            4 => {
                let i = rng.random_range(0..v.pre.len());
                let j = rng.random_range(0..v.pre[i].1.len());
                v.pre[i].1[j].1 ^= true;
            }
            5 => {
                let items = if rng.random_bool(0.5) { &mut v.pre } else { &mut v.post };
                let i = rng.random_range(0..items.len());
                let (lo, hi) = items[i].0;
                items[i].0 = if hi > lo {
                    let k = rng.random_range(lo..=hi);
                    if rng.random_bool(0.5) {
                        (lo, k)
                    } else {
                        (k, hi)
                    }
                } else {
                    (lo, (lo + 1).min(3))
                };
            }
            _ => {
                let i = rng.random_range(0..v.post.len());
                v.post[i].1.push((rng.random_range(0..4), rng.random_bool(0.5)));
            }
        }
        v.pre[0].0 = (0, 0);
        v
    }
}

/// A randomized set of 2 to 6 assertions over `a`..`d` with delays at most 3.
pub fn random_set(rng: &mut ChaCha8Rng) -> Vec<Assertion> {
    let size = rng.random_range(2..=6);
    let mut shapes = vec![Shape::random(rng)];
    while shapes.len() < size {
        let s = if rng.random_bool(0.25) {
            Shape::random(rng)
        } else {
            let base = shapes.choose(rng).unwrap().clone();
            base.variant(rng)
        };
        shapes.push(s);
    }
    let mut out = Vec::new();
    for (i, s) in shapes.iter().enumerate() {
        let text = if rng.random_bool(0.1) {
            format!("{} || !{}", item_text(&s.pre[0].1), ATOMS[i % 4])
        } else {
            s.text()
        };
        out.push(parse_assertion(&text, &format!("t{i}")).unwrap_or_else(|e| panic!("{text}: {e}")));
    }
    out
}

pub fn parse_set(texts: &[&str]) -> Vec<Assertion> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| parse_assertion(t, &format!("a{i}")).unwrap())
        .collect()
}

/// Conjunction-level comparison of two sets on `samples` shared lassos with
/// the reference semantics above. Returns the first disagreeing lasso index.
pub fn lasso_equivalent(old: &[Assertion], new: &[Assertion], samples: usize, seed: u64) -> Result<(), usize> {
    let mut atoms = BTreeSet::new();
    for a in old.iter().chain(new) {
        atoms.extend(atomic_propositions(a));
    }
    let f = |xs: &[Assertion]| xs.iter().map(|a| to_ltl(a).expect("ltl form")).collect::<Vec<_>>();
    let (fo, fn_) = (f(old), f(new));
    let pool = LassoPool::sample(&atoms, samples, seed, LassoBounds::default());
    for (i, l) in pool.lassos.iter().enumerate() {
        let a = fo.iter().all(|g| holds(g, l, &pool.atoms));
        let b = fn_.iter().all(|g| holds(g, l, &pool.atoms));
        if a != b {
            return Err(i);
        }
    }
    Ok(())
}

/// `None` when the SAT expansion refuses either side.
pub fn sat_equivalent(old: &[Assertion], new: &[Assertion]) -> Option<bool> {
    sat::set_equivalent(old, new).ok()
}
