//! UCT search over rule sequences for one cluster, plus fixed-order
//! baselines and the corpus-level driver.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::config::SearchConfig;
use crate::assertion::{atomic_propositions, Assertion};
use crate::cluster::ClusterSet;
use crate::config::AtomMetric;
use crate::par;
use crate::rules::{certify, total_atoms, RuleId};
use crate::util::{mix_seed, stable_hash};

/// An assertion set with its size measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionState {
    pub assertions: Arc<Vec<Assertion>>,
    pub assertion_count: usize,
    pub atom_count: usize,
    pub history: Vec<RuleId>,
    hash: u64,
}

fn atom_count(set: &[Assertion], metric: AtomMetric) -> usize {
    match metric {
        AtomMetric::Occurrences => total_atoms(set),
        AtomMetric::Distinct => set
            .iter()
            .flat_map(atomic_propositions)
            .collect::<BTreeSet<_>>()
            .len(),
    }
}

fn content_hash(set: &[Assertion]) -> u64 {
    // the raw AST, not printed text: the printer drops duplicate literals
    let mut buf = String::new();
    for a in set {
        buf.push_str(&format!("{a:?}\n"));
    }
    stable_hash(buf.as_bytes())
}

impl ReductionState {
    pub fn new(assertions: Vec<Assertion>, metric: AtomMetric) -> Self {
        Self {
            assertion_count: assertions.len(),
            atom_count: atom_count(&assertions, metric),
            hash: content_hash(&assertions),
            assertions: Arc::new(assertions),
            history: Vec::new(),
        }
    }

    pub fn content_hash(&self) -> u64 {
        self.hash
    }
}

/// Step reward: decrease in assertion count plus decrease in atom count.
pub fn reward(prev: &ReductionState, next: &ReductionState) -> f64 {
    (prev.assertion_count as f64 - next.assertion_count as f64) + (prev.atom_count as f64 - next.atom_count as f64)
}

/// One applied rule along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub rule: RuleId,
    pub delta_assertions: usize,
    pub delta_atoms: i64,
    pub rolled_back: bool,
    pub flagged_falsum: Vec<String>,
}

impl StepRecord {
    pub fn changed(&self) -> bool {
        self.delta_assertions > 0 || self.delta_atoms != 0
    }
}

#[derive(Clone)]
struct Transition {
    next: Arc<Vec<Assertion>>,
    next_hash: u64,
    record: StepRecord,
    changed: bool,
}

/// Memoized, certified rule application shared by the tree and rollouts.
struct Engine<'a> {
    cfg: &'a SearchConfig,
    memo: HashMap<(u64, RuleId), Transition>,
    incidents: Vec<String>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SearchConfig) -> Self {
        Self {
            cfg,
            memo: HashMap::new(),
            incidents: Vec::new(),
        }
    }

    fn apply(&mut self, state: &ReductionState, rule: RuleId) -> Transition {
        let key = (state.hash, rule);
        if let Some(t) = self.memo.get(&key) {
            return t.clone();
        }
        let t = self.compute(state, rule);
        self.memo.insert(key, t.clone());
        t
    }

    fn compute(&mut self, state: &ReductionState, rule: RuleId) -> Transition {
        let out = rule.apply(&state.assertions);
        let unchanged = Transition {
            next: state.assertions.clone(),
            next_hash: state.hash,
            record: StepRecord {
                rule,
                delta_assertions: 0,
                delta_atoms: 0,
                rolled_back: false,
                flagged_falsum: out.flagged_falsum.clone(),
            },
            changed: false,
        };
        if !out.changed() {
            return unchanged;
        }
        assert!(out.new_set.len() <= state.assertions.len(), "rule {rule} grew the set");
        let seed = mix_seed(self.cfg.seed, &[format!("{:x}", state.hash), rule.short().to_string()]);
        let cert = certify(&state.assertions, &out.new_set, self.cfg.certify_samples, seed);
        if !cert.passed {
            let msg = format!(
                "{rule} rolled back on state {:016x}: lasso {} disagrees",
                state.hash,
                cert.counterexample.unwrap_or(0)
            );
            tracing::error!("{msg}");
            self.incidents.push(msg);
            let mut t = unchanged;
            t.record.rolled_back = true;
            return t;
        }
        let before = atom_count(&state.assertions, self.cfg.atom_metric) as i64;
        let after = atom_count(&out.new_set, self.cfg.atom_metric) as i64;
        let next_hash = content_hash(&out.new_set);
        Transition {
            changed: next_hash != state.hash,
            next_hash,
            next: Arc::new(out.new_set),
            record: StepRecord {
                rule,
                delta_assertions: out.delta_assertions,
                delta_atoms: before - after,
                rolled_back: false,
                flagged_falsum: out.flagged_falsum,
            },
        }
    }

    fn successor(&mut self, state: &ReductionState, rule: RuleId) -> (ReductionState, StepRecord, bool) {
        let t = self.apply(state, rule);
        let mut history = state.history.clone();
        history.push(rule);
        let next = ReductionState {
            assertion_count: t.next.len(),
            atom_count: atom_count(&t.next, self.cfg.atom_metric),
            assertions: t.next,
            history,
            hash: t.next_hash,
        };
        (next, t.record, t.changed)
    }

    fn at_fixpoint(&mut self, state: &ReductionState) -> bool {
        RuleId::ALL.iter().all(|&r| !self.apply(state, r).changed)
    }
}

/// State transition `S_{t+1} = r(S_t)` with certification; a failed
/// certificate leaves the state unchanged.
pub fn transition(state: &ReductionState, rule: RuleId, cfg: &SearchConfig) -> ReductionState {
    Engine::new(cfg).successor(state, rule).0
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: ReductionState,
    pub parent: Option<(usize, RuleId)>,
    pub children: [Option<usize>; 5],
    pub visits: u64,
    pub total_reward: f64,
    /// Reward accumulated from the root to this node.
    pub cumulative_reward: f64,
    step: Option<StepRecord>,
}

impl SearchNode {
    pub fn mean_reward(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_reward / self.visits as f64
        }
    }

    pub fn depth(&self) -> usize {
        self.state.history.len()
    }
}

/// UCT score `Q + c * sqrt(ln N(s) / N(s,a))`.
pub fn uct_score(q: f64, parent_visits: u64, child_visits: u64, c: f64) -> f64 {
    q + c * ((parent_visits as f64).ln() / child_visits as f64).sqrt()
}

/// Action at `node`: the first unvisited rule if any, else the UCT argmax
/// (ties to the lower rule).
pub fn uct_select(tree: &[SearchNode], node: usize, c: f64) -> RuleId {
    let n = &tree[node];
    let mut best: Option<(f64, RuleId)> = None;
    for r in RuleId::ALL {
        let child = n.children[r.index()].map(|i| &tree[i]);
        match child {
            None => return r,
            Some(ch) if ch.visits == 0 => return r,
            Some(ch) => {
                let s = uct_score(ch.mean_reward(), n.visits, ch.visits, c);
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, r));
                }
            }
        }
    }
    best.expect("five actions").1
}

/// Reward and terminal state of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub reward: f64,
    pub r_max: f64,
    pub initial_count: usize,
    pub final_count: usize,
    pub initial_atoms: usize,
    pub final_atoms: usize,
    pub steps: Vec<StepRecord>,
}

/// One search tree over a cluster.
pub struct Search<'a> {
    pub tree: Vec<SearchNode>,
    cfg: &'a SearchConfig,
    engine: Engine<'a>,
    rng: ChaCha8Rng,
    best: Option<(f64, ReductionState, Vec<StepRecord>)>,
}

impl<'a> Search<'a> {
    pub fn new(cluster: Vec<Assertion>, cfg: &'a SearchConfig) -> Self {
        let root = SearchNode {
            state: ReductionState::new(cluster, cfg.atom_metric),
            parent: None,
            children: [None; 5],
            visits: 1,
            total_reward: 0.0,
            cumulative_reward: 0.0,
            step: None,
        };
        Self {
            tree: vec![root],
            cfg,
            engine: Engine::new(cfg),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            best: None,
        }
    }

    fn path_steps(&self, mut node: usize) -> Vec<StepRecord> {
        let mut steps = Vec::new();
        while let Some(s) = &self.tree[node].step {
            steps.push(s.clone());
            node = self.tree[node].parent.expect("non-root").0;
        }
        steps.reverse();
        steps
    }

    fn expand(&mut self, node: usize, rule: RuleId) -> usize {
        let parent = &self.tree[node];
        let (state, record, _) = self.engine.successor(&parent.state, rule);
        let r = reward(&parent.state, &state);
        assert!(state.assertion_count <= parent.state.assertion_count, "contraction violated");
        let child = SearchNode {
            cumulative_reward: parent.cumulative_reward + r,
            state,
            parent: Some((node, rule)),
            children: [None; 5],
            visits: 0,
            total_reward: 0.0,
            step: Some(record),
        };
        self.tree.push(child);
        let id = self.tree.len() - 1;
        self.tree[node].children[rule.index()] = Some(id);
        id
    }

    /// Selection, expansion, rollout and backpropagation. Returns the
    /// trajectory's cumulative reward.
    pub fn one_iteration(&mut self) -> TrajectoryLog {
        let mut node = 0;
        let mut path = vec![0];
        loop {
            if self.tree[node].depth() >= self.cfg.max_depth {
                break;
            }
            let r = uct_select(&self.tree, node, self.cfg.exploration);
            match self.tree[node].children[r.index()] {
                Some(child) if self.tree[child].visits > 0 => {
                    node = child;
                    path.push(node);
                }
                Some(child) => {
                    node = child;
                    path.push(node);
                    break;
                }
                None => {
                    node = self.expand(node, r);
                    path.push(node);
                    break;
                }
            }
        }
        let mut steps = self.path_steps(node);
        let mut state = self.tree[node].state.clone();
        let mut total = self.tree[node].cumulative_reward;
        for _ in 0..self.cfg.rollout_depth {
            if self.engine.at_fixpoint(&state) {
                break;
            }
            let rule = RuleId::ALL[self.rng.random_range(0..RuleId::ALL.len())];
            let (next, record, _) = self.engine.successor(&state, rule);
            assert!(next.assertion_count <= state.assertion_count, "contraction violated");
            total += reward(&state, &next);
            steps.push(record);
            state = next;
        }
        let (initial_count, initial_atoms) = (self.tree[0].state.assertion_count, self.tree[0].state.atom_count);
        let telescoped = (initial_count as f64 - state.assertion_count as f64)
            + (initial_atoms as f64 - state.atom_count as f64);
        assert!((total - telescoped).abs() < 1e-9, "reward does not telescope");
        for &p in &path {
            let n = &mut self.tree[p];
            n.visits += 1;
            n.total_reward += total;
        }
        let improved = self.best.as_ref().is_none_or(|(b, _, _)| total > *b + 1e-12);
        if improved {
            self.best = Some((total, state.clone(), steps.clone()));
        }
        TrajectoryLog {
            reward: total,
            r_max: self.best.as_ref().map_or(0.0, |b| b.0.max(0.0)),
            initial_count,
            final_count: state.assertion_count,
            initial_atoms,
            final_atoms: state.atom_count,
            steps,
        }
    }

    pub fn incidents(&self) -> &[String] {
        &self.engine.incidents
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub reduced: Vec<Assertion>,
    pub r_max: f64,
    pub iterations: usize,
    /// Steps of the best trajectory.
    pub best_steps: Vec<StepRecord>,
    pub trajectories: Vec<TrajectoryLog>,
    pub incidents: Vec<String>,
    pub tree_size: usize,
    pub root_visits: u64,
}

/// Search one cluster: iterate until the best reward has not
/// improved for `patience` iterations or the iteration cap is reached.
pub fn mcts_reduce(cluster: Vec<Assertion>, cfg: &SearchConfig) -> SearchResult {
    let initial = cluster.clone();
    let mut search = Search::new(cluster, cfg);
    let mut r_max = 0.0f64;
    let mut stale = 0;
    let mut logs = Vec::new();
    for _ in 0..cfg.iterations {
        let log = search.one_iteration();
        if log.reward > r_max + 1e-12 {
            r_max = log.reward;
            stale = 0;
        } else {
            stale += 1;
        }
        logs.push(log);
        if stale >= cfg.patience {
            break;
        }
    }
    let (reduced, best_steps) = match &search.best {
        Some((b, state, steps)) if *b > 0.0 => (state.assertions.as_ref().clone(), steps.clone()),
        _ => (initial, Vec::new()),
    };
    SearchResult {
        reduced,
        r_max,
        iterations: logs.len(),
        best_steps,
        trajectories: logs,
        incidents: search.engine.incidents.clone(),
        tree_size: search.tree.len(),
        root_visits: search.tree[0].visits,
    }
}

/// Apply one rule repeatedly until it stops changing the set.
pub fn single_rule_baseline(cluster: &[Assertion], rule: RuleId) -> Vec<Assertion> {
    let mut cur = cluster.to_vec();
    for _ in 0..64 {
        let out = rule.apply(&cur);
        if !out.changed() {
            break;
        }
        cur = out.new_set;
    }
    cur
}

/// R1..R5 in order, repeated until a full round changes nothing.
pub fn round_robin_baseline(cluster: &[Assertion]) -> Vec<Assertion> {
    let mut cur = cluster.to_vec();
    for _ in 0..64 {
        let mut changed = false;
        for rule in RuleId::ALL {
            let out = rule.apply(&cur);
            if out.changed() {
                changed = true;
                cur = out.new_set;
            }
        }
        if !changed {
            break;
        }
    }
    cur
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReduction {
    pub index: usize,
    pub ids: Vec<String>,
    pub original_count: usize,
    pub reduced_count: usize,
    pub r_max: f64,
    pub iterations: usize,
    pub steps: Vec<StepRecord>,
    pub incidents: Vec<String>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CorpusReduction {
    pub assertions: Vec<Assertion>,
    pub clusters: Vec<ClusterReduction>,
}

/// Reduce every cluster independently (seeded per cluster index) and
/// concatenate results in cluster order. Ids missing from `corpus` are
/// ignored.
pub fn reduce_corpus(corpus: &[Assertion], clusters: &ClusterSet, cfg: &SearchConfig, workers: usize) -> CorpusReduction {
    let by_id: HashMap<&str, &Assertion> = corpus.iter().map(|a| (a.id.as_str(), a)).collect();
    let results = par::map_indexed(clusters.len(), workers, |k| {
        let members: Vec<Assertion> = clusters.clusters[k]
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).map(|a| (*a).clone()))
            .collect();
        let local = SearchConfig {
            seed: mix_seed(cfg.seed, &[k.to_string()]),
            ..cfg.clone()
        };
        let start = Instant::now();
        let res = mcts_reduce(members.clone(), &local);
        ClusterReduction {
            index: k,
            ids: members.iter().map(|a| a.id.clone()).collect(),
            original_count: members.len(),
            reduced_count: res.reduced.len(),
            r_max: res.r_max,
            iterations: res.iterations,
            steps: res.best_steps,
            incidents: res.incidents,
            elapsed_s: start.elapsed().as_secs_f64(),
        }
        .with_output(res.reduced)
    });
    let mut out = CorpusReduction::default();
    for (c, reduced) in results {
        out.assertions.extend(reduced);
        out.clusters.push(c);
    }
    out
}

impl ClusterReduction {
    fn with_output(self, reduced: Vec<Assertion>) -> (Self, Vec<Assertion>) {
        (self, reduced)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertion::{parse_assertion, print_assertion};

    fn set(texts: &[&str]) -> Vec<Assertion> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| parse_assertion(t, &format!("a{i}")).unwrap())
            .collect()
    }

    #[test]
    fn eq8_arithmetic() {
        let mk = |n: usize, atoms: usize| ReductionState {
            assertions: Arc::new(Vec::new()),
            assertion_count: n,
            atom_count: atoms,
            history: Vec::new(),
            hash: 0,
        };
        assert_eq!(reward(&mk(10, 30), &mk(7, 22)), 11.0);
        assert_eq!(reward(&mk(5, 12), &mk(5, 12)), 0.0);
        assert_eq!(reward(&mk(5, 12), &mk(5, 9)), 3.0);
    }

    #[test]
    fn uct_arithmetic() {
        let s = uct_score(0.5, 10, 2, 1.414);
        assert!((s - 2.0173).abs() < 1e-3, "{s}");
    }

    #[test]
    fn root_prior_is_rule1() {
        let cfg = SearchConfig::default();
        let mut s = Search::new(set(&["a |-> b", "a |-> b"]), &cfg);
        s.one_iteration();
        assert!(s.tree[0].children[0].is_some());
        assert!(s.tree[0].children[1..].iter().all(Option::is_none));
    }

    #[test]
    fn duplicates_collapse() {
        let res = mcts_reduce(set(&["a |-> b", "a |-> b", "a |-> b"]), &SearchConfig::default());
        assert_eq!(res.reduced.len(), 1);
    }

    #[test]
    fn disjunction_example() {
        let res = mcts_reduce(set(&["a |-> q", "b |-> q", "a |-> q"]), &SearchConfig::default());
        assert_eq!(res.reduced.len(), 1);
        assert_eq!(print_assertion(&res.reduced[0]), "(a || b) |-> q");
    }

    #[test]
    fn minimal_cluster_unchanged() {
        let input = set(&["a |-> b"]);
        let res = mcts_reduce(input.clone(), &SearchConfig::default());
        assert_eq!(res.reduced, input);
        assert_eq!(res.r_max, 0.0);
        assert_eq!(res.iterations, 3);
    }
}
