//! Tableau construction (expand/cover over obligation sets) with
//! degeneralization to a single Büchi acceptance set.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::lasso::Lasso;
use super::{Ltl, OmegaError};

pub const MAX_AUTOMATON_ATOMS: usize = 16;
pub const MAX_TABLEAU_NODES: usize = 4096;

/// Conjunction of literals: atoms in `pos` must hold, atoms in `neg` must not.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Guard {
    pub pos: u32,
    pub neg: u32,
}

impl Guard {
    pub fn admits(self, letter: u32) -> bool {
        self.pos & !letter == 0 && self.neg & letter == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiAutomaton {
    /// Sorted atom list; bit `i` of a letter is `atoms[i]`.
    pub atoms: Vec<String>,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// Outgoing edges per state.
    pub transitions: Vec<Vec<(Guard, usize)>>,
}

impl BuchiAutomaton {
    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    /// Project a pool letter onto this automaton's atoms; `index[k]` is the
    /// pool position of `atoms[k]`.
    pub fn local_letter(letter: &crate::util::BitSet, index: &[Option<usize>]) -> u32 {
        index
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_some_and(|p| letter.get(p)))
            .fold(0, |m, (k, _)| m | 1 << k)
    }

    fn step(&self, states: &BTreeSet<usize>, letter: u32) -> BTreeSet<usize> {
        states
            .iter()
            .flat_map(|&q| self.transitions[q].iter())
            .filter(|(g, _)| g.admits(letter))
            .map(|&(_, t)| t)
            .collect()
    }

    /// Whether the automaton accepts `lam`, whose letters are indexed by
    /// `pool_atoms`.
    pub fn accepts(&self, lam: &Lasso, pool_atoms: &[String]) -> bool {
        let index: Vec<Option<usize>> = self
            .atoms
            .iter()
            .map(|a| pool_atoms.iter().position(|p| p == a))
            .collect();
        self.accepts_indexed(lam, &index)
    }

    /// Every state with an incoming edge is accepting, so any infinite run
    /// is accepting.
    pub fn is_safety(&self) -> bool {
        let mut entered = vec![false; self.num_states()];
        for out in &self.transitions {
            for &(_, t) in out {
                entered[t] = true;
            }
        }
        (0..self.num_states()).all(|q| self.accepting[q] || !entered[q])
    }

    pub fn accepts_indexed(&self, lam: &Lasso, index: &[Option<usize>]) -> bool {
        if self.is_safety() {
            self.accepts_safety(lam, index)
        } else {
            self.accepts_product(lam, index)
        }
    }

    /// Acceptance for [`is_safety`](Self::is_safety) automata: the set of
    /// states reachable after `prefix · cycle^m` is non-empty for every `m`.
    pub(crate) fn accepts_safety(&self, lam: &Lasso, index: &[Option<usize>]) -> bool {
        let words = self.num_states().div_ceil(64);
        let mut cur = vec![0u64; words];
        cur[self.initial / 64] |= 1 << (self.initial % 64);
        let mut next = vec![0u64; words];
        let mut step = |cur: &mut Vec<u64>, letter: u32| -> bool {
            next.iter_mut().for_each(|w| *w = 0);
            let mut any = false;
            for (w, &word) in cur.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let q = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    for &(g, t) in &self.transitions[q] {
                        if g.admits(letter) {
                            next[t / 64] |= 1 << (t % 64);
                            any = true;
                        }
                    }
                }
            }
            std::mem::swap(cur, &mut next);
            any
        };
        for l in &lam.prefix {
            if !step(&mut cur, Self::local_letter(l, index)) {
                return false;
            }
        }
        let cycle: Vec<u32> = lam.cycle.iter().map(|l| Self::local_letter(l, index)).collect();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        while seen.insert(cur.clone()) {
            for &l in &cycle {
                if !step(&mut cur, l) {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn accepts_product(&self, lam: &Lasso, index: &[Option<usize>]) -> bool {
        let mut current = BTreeSet::from([self.initial]);
        for l in &lam.prefix {
            current = self.step(&current, Self::local_letter(l, index));
            if current.is_empty() {
                return false;
            }
        }
        let cycle: Vec<u32> = lam.cycle.iter().map(|l| Self::local_letter(l, index)).collect();
        let len = cycle.len();
        // product graph: node (q, j) = in state q, about to read cycle[j]
        let id = |q: usize, j: usize| q * len + j;
        let n = self.num_states() * len;
        let mut reached = vec![false; n];
        let mut queue: VecDeque<usize> = current.iter().map(|&q| id(q, 0)).collect();
        for &v in &queue {
            reached[v] = true;
        }
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        while let Some(v) = queue.pop_front() {
            let (q, j) = (v / len, v % len);
            for &(g, t) in &self.transitions[q] {
                if g.admits(cycle[j]) {
                    let w = id(t, (j + 1) % len);
                    succ[v].push(w);
                    if !reached[w] {
                        reached[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        let scc = tarjan(&succ, &reached);
        (0..n).any(|v| {
            reached[v]
                && self.accepting[v / len]
                && (scc.sizes[scc.comp[v]] > 1 || succ[v].contains(&v))
        })
    }
}

struct Scc {
    comp: Vec<usize>,
    sizes: Vec<usize>,
}

/// Merge bisimilar states (same acceptance, same guarded edges into the same
/// classes). State 0 stays the initial state.
fn quotient(transitions: Vec<Vec<(Guard, usize)>>, accepting: Vec<bool>) -> (Vec<Vec<(Guard, usize)>>, Vec<bool>) {
    let n = accepting.len();
    let mut class: Vec<usize> = accepting.iter().map(|&a| usize::from(a)).collect();
    let mut count = 0;
    loop {
        let mut ids: HashMap<(usize, Vec<(Guard, usize)>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for q in 0..n {
            let mut sig: Vec<(Guard, usize)> = transitions[q].iter().map(|&(g, t)| (g, class[t])).collect();
            sig.sort();
            sig.dedup();
            let k = ids.len();
            next[q] = *ids.entry((class[q], sig)).or_insert(k);
        }
        let stable = ids.len() == count;
        count = ids.len();
        class = next;
        if stable {
            break;
        }
    }
    let mut rep = vec![usize::MAX; count];
    for q in 0..n {
        if rep[class[q]] == usize::MAX {
            rep[class[q]] = q;
        }
    }
    let out = rep
        .iter()
        .map(|&q| {
            let mut e: Vec<(Guard, usize)> = transitions[q].iter().map(|&(g, t)| (g, class[t])).collect();
            e.sort();
            e.dedup();
            e
        })
        .collect();
    (out, rep.iter().map(|&q| accepting[q]).collect())
}

/// Iterative Tarjan restricted to `active` vertices.
fn tarjan(succ: &[Vec<usize>], active: &[bool]) -> Scc {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if !active[root] || index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let c = sizes.len();
                    let mut size = 0;
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = c;
                        size += 1;
                        if w == v {
                            break;
                        }
                    }
                    sizes.push(size);
                }
            }
        }
    }
    Scc { comp, sizes }
}

/// Subformula closure with interned ids.
struct Closure {
    formulas: Vec<Ltl>,
    ids: HashMap<Ltl, usize>,
}

impl Closure {
    fn intern(&mut self, f: &Ltl) -> usize {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        match f {
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                self.intern(a);
                self.intern(b);
            }
            Ltl::Next(a) | Ltl::Finally(a) | Ltl::Globally(a) => {
                self.intern(a);
            }
            _ => {}
        }
        let i = self.formulas.len();
        self.formulas.push(f.clone());
        self.ids.insert(f.clone(), i);
        i
    }

    fn id(&self, f: &Ltl) -> usize {
        self.ids[f]
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn pop_first(&mut self) -> Option<usize> {
        for (w, word) in self.0.iter_mut().enumerate() {
            if *word != 0 {
                let b = word.trailing_zeros() as usize;
                *word &= *word - 1;
                return Some(w * 64 + b);
            }
        }
        None
    }

    fn masked(&self, mask: &Bits) -> Bits {
        Bits(self.0.iter().zip(&mask.0).map(|(a, b)| a & b).collect())
    }
}

#[derive(Clone)]
struct Pending {
    incoming: Vec<usize>,
    new: Bits,
    old: Bits,
    next: Bits,
}

struct TableauNode {
    incoming: Vec<usize>,
    old: Bits,
}

const INIT: usize = usize::MAX;

/// Expand/cover tableau. Nodes are identified by their literals, their
/// next-obligations and the eventuality formulas they hold, which is all the
/// automaton reads from them.
fn tableau(f: &Ltl, cl: &Closure) -> Result<Vec<TableauNode>, OmegaError> {
    let n = cl.formulas.len();
    let mut key_mask = Bits::new(n);
    let mut negation: Vec<Option<usize>> = vec![None; n];
    for (i, g) in cl.formulas.iter().enumerate() {
        match g {
            Ltl::Atom(a) => {
                key_mask.insert(i);
                negation[i] = cl.ids.get(&Ltl::NotAtom(a.clone())).copied();
            }
            Ltl::NotAtom(a) => {
                key_mask.insert(i);
                negation[i] = cl.ids.get(&Ltl::Atom(a.clone())).copied();
            }
            Ltl::Until(_, b) | Ltl::Finally(b) => {
                key_mask.insert(i);
                key_mask.insert(cl.id(b));
            }
            _ => {}
        }
    }
    let child = |g: &Ltl| cl.id(g);
    let mut nodes: Vec<TableauNode> = Vec::new();
    let mut by_key: HashMap<(Bits, Bits), usize> = HashMap::new();
    let mut start = Bits::new(n);
    start.insert(cl.id(f));
    let mut stack = vec![Pending {
        incoming: vec![INIT],
        new: start,
        old: Bits::new(n),
        next: Bits::new(n),
    }];
    'outer: while let Some(mut nd) = stack.pop() {
        while let Some(eta) = nd.new.pop_first() {
            if nd.old.contains(eta) {
                continue;
            }
            match &cl.formulas[eta] {
                Ltl::True => {}
                Ltl::False => continue 'outer,
                Ltl::Atom(_) | Ltl::NotAtom(_) => {
                    if negation[eta].is_some_and(|m| nd.old.contains(m)) {
                        continue 'outer;
                    }
                }
                Ltl::And(a, b) => {
                    for x in [child(a), child(b)] {
                        if !nd.old.contains(x) {
                            nd.new.insert(x);
                        }
                    }
                }
                Ltl::Next(a) => nd.next.insert(child(a)),
                Ltl::Or(a, b) => {
                    let mut other = nd.clone();
                    other.old.insert(eta);
                    other.new.insert(child(b));
                    stack.push(other);
                    nd.new.insert(child(a));
                }
                Ltl::Until(a, b) => {
                    let mut other = nd.clone();
                    other.old.insert(eta);
                    other.new.insert(child(b));
                    stack.push(other);
                    nd.new.insert(child(a));
                    nd.next.insert(eta);
                }
                Ltl::Finally(b) => {
                    let mut other = nd.clone();
                    other.old.insert(eta);
                    other.new.insert(child(b));
                    stack.push(other);
                    nd.next.insert(eta);
                }
                Ltl::Release(a, b) => {
                    let mut other = nd.clone();
                    other.old.insert(eta);
                    other.new.insert(child(a));
                    other.new.insert(child(b));
                    stack.push(other);
                    nd.new.insert(child(b));
                    nd.next.insert(eta);
                }
                Ltl::Globally(a) => {
                    nd.new.insert(child(a));
                    nd.next.insert(eta);
                }
            }
            nd.old.insert(eta);
        }
        let key = (nd.old.masked(&key_mask), nd.next.clone());
        if let Some(&i) = by_key.get(&key) {
            nodes[i].incoming.extend(nd.incoming);
            continue;
        }
        if nodes.len() >= MAX_TABLEAU_NODES {
            return Err(OmegaError::TooManyStates(MAX_TABLEAU_NODES));
        }
        let i = nodes.len();
        by_key.insert(key, i);
        stack.push(Pending {
            incoming: vec![i],
            new: nd.next.clone(),
            old: Bits::new(n),
            next: Bits::new(n),
        });
        nodes.push(TableauNode {
            incoming: nd.incoming,
            old: nd.old,
        });
    }
    for node in &mut nodes {
        node.incoming.sort_unstable();
        node.incoming.dedup();
    }
    Ok(nodes)
}

fn eventualities(f: &Ltl, out: &mut BTreeSet<Ltl>) {
    match f {
        Ltl::True | Ltl::False | Ltl::Atom(_) | Ltl::NotAtom(_) => {}
        Ltl::Next(a) | Ltl::Globally(a) => eventualities(a, out),
        Ltl::Finally(a) => {
            out.insert(f.clone());
            eventualities(a, out);
        }
        Ltl::Until(a, b) => {
            out.insert(f.clone());
            eventualities(a, out);
            eventualities(b, out);
        }
        Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Release(a, b) => {
            eventualities(a, out);
            eventualities(b, out);
        }
    }
}

/// Build a Büchi automaton with `L(aut) = L(f)`.
pub fn ltl_to_buchi(f: &Ltl) -> Result<BuchiAutomaton, OmegaError> {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    if atoms.len() > MAX_AUTOMATON_ATOMS {
        return Err(OmegaError::TooManyAtoms {
            used: atoms.len(),
            limit: MAX_AUTOMATON_ATOMS,
        });
    }
    let bit = |a: &str| 1u32 << atoms.iter().position(|x| x == a).expect("atom collected");
    let mut cl = Closure {
        formulas: Vec::new(),
        ids: HashMap::new(),
    };
    cl.intern(f);
    let nodes = tableau(f, &cl)?;
    // generalized automaton: state 0 is the initial pseudo-state, node i is i + 1
    let n = nodes.len() + 1;
    let mut label = vec![Guard::default(); n];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, node) in nodes.iter().enumerate() {
        for (j, lit) in cl.formulas.iter().enumerate() {
            if !node.old.contains(j) {
                continue;
            }
            match lit {
                Ltl::Atom(a) => label[i + 1].pos |= bit(a),
                Ltl::NotAtom(a) => label[i + 1].neg |= bit(a),
                _ => {}
            }
        }
        for &p in &node.incoming {
            let from = if p == INIT { 0 } else { p + 1 };
            edges[from].push(i + 1);
        }
    }
    let mut evs = BTreeSet::new();
    eventualities(f, &mut evs);
    let sets: Vec<Vec<bool>> = if evs.is_empty() {
        vec![(0..n).map(|q| q != 0).collect()]
    } else {
        evs.iter()
            .map(|u| {
                let rhs = match u {
                    Ltl::Until(_, b) | Ltl::Finally(b) => (**b).clone(),
                    _ => unreachable!(),
                };
                let mut member = vec![false; n];
                for (i, node) in nodes.iter().enumerate() {
                    member[i + 1] = !node.old.contains(cl.id(u)) || node.old.contains(cl.id(&rhs));
                }
                member
            })
            .collect()
    };
    let k = sets.len();

    // degeneralize: (q, c) moves its counter on when q is in set c
    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    ids.insert((0, 0), 0);
    order.push((0, 0));
    let mut transitions: Vec<Vec<(Guard, usize)>> = Vec::new();
    while let Some((q, c)) = queue.pop_front() {
        let c2 = if sets[c][q] { (c + 1) % k } else { c };
        let mut out = Vec::new();
        for &t in &edges[q] {
            let key = (t, c2);
            let id = *ids.entry(key).or_insert_with(|| {
                order.push(key);
                queue.push_back(key);
                order.len() - 1
            });
            out.push((label[t], id));
        }
        out.sort();
        out.dedup();
        transitions.push(out);
    }
    let accepting: Vec<bool> = order.iter().map(|&(q, c)| c == 0 && sets[0][q]).collect();
    let (mut transitions, mut accepting) = quotient(transitions, accepting);

    // an initial state with the same outgoing edges as some other state can
    // be replaced by it (acceptance on a single visit is irrelevant); only
    // when nothing re-enters the initial state
    let entered = transitions.iter().flatten().any(|e| e.1 == 0);
    let twin = (1..transitions.len()).find(|&s| !entered && transitions[s] == transitions[0]);
    let mut initial = 0;
    if let Some(s) = twin {
        let remap = |x: usize| x - 1;
        transitions.remove(0);
        accepting.remove(0);
        for out in &mut transitions {
            for e in out.iter_mut() {
                e.1 = remap(e.1);
            }
        }
        initial = remap(s);
    }
    Ok(BuchiAutomaton {
        atoms,
        initial,
        accepting,
        transitions,
    })
}
