//! Fused linguistic/behavioral similarity and density clustering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assertion::{atomic_propositions, Assertion};
use crate::config::Config;
use crate::embed::{render_nl, similarity, EmbedError, Embedder, EmbeddingVector};
use crate::omega::{acceptance_vector, jaccard, ltl_to_buchi, AcceptanceVector, LassoPool};
use crate::par;
use crate::sat::{truth_table_sat_set, TRUTH_TABLE_MAX_ATOMS};
use crate::temporal::to_ltl;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("fusion weights must sum to 1 (alpha {alpha}, beta {beta})")]
    WeightSum { alpha: f64, beta: f64 },
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("duplicate assertion id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    pub s_nl: Vec<Vec<f64>>,
    /// `None` where at least one side has no behavioral score.
    pub s_lasso: Vec<Vec<Option<f64>>>,
    pub s_fused: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    /// Pairs `(i, j)`, `i < j`, fused from `s_nl` alone.
    pub nl_only: Vec<(usize, usize)>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `s = alpha * s_nl + beta * s_lasso`, `d = 1 - s`. Pairs without a lasso
/// score use `s = s_nl` and are recorded in `nl_only`.
pub fn fuse(
    ids: Vec<String>,
    s_nl: Vec<Vec<f64>>,
    s_lasso: Vec<Vec<Option<f64>>>,
    alpha: f64,
    beta: f64,
) -> Result<SimilarityMatrix, ClusterError> {
    if (alpha + beta - 1.0).abs() > 1e-9 {
        return Err(ClusterError::WeightSum { alpha, beta });
    }
    let n = ids.len();
    let mut s_fused = vec![vec![1.0; n]; n];
    let mut nl_only = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            s_fused[i][j] = match s_lasso[i][j] {
                Some(l) => alpha * s_nl[i][j] + beta * l,
                None => {
                    if i < j {
                        nl_only.push((i, j));
                    }
                    s_nl[i][j]
                }
            };
        }
    }
    let d = s_fused
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, s)| if i == j { 0.0 } else { 1.0 - s }).collect())
        .collect();
    Ok(SimilarityMatrix {
        ids,
        s_nl,
        s_lasso,
        s_fused,
        d,
        nl_only,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Vec<String>>,
    pub noise_as_singletons: bool,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Numerical slack on the `d <= eps` test.
const EPS_SLACK: f64 = 1e-12;

/// DBSCAN over a precomputed distance matrix. A point counts itself as a
/// neighbor; noise points become singleton clusters. Clusters are returned as
/// index lists ordered by their smallest member.
pub fn dbscan_indices(d: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    let n = d.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| d[i][j] <= eps + EPS_SLACK).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if label[start].is_some() || !core[start] {
            continue;
        }
        let c = clusters.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        label[start] = Some(c);
        while let Some(p) = stack.pop() {
            members.push(p);
            if !core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if label[q].is_none() {
                    label[q] = Some(c);
                    stack.push(q);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    for (i, l) in label.iter().enumerate() {
        if l.is_none() {
            clusters.push(vec![i]);
        }
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

pub fn dbscan(m: &SimilarityMatrix, eps: f64, min_pts: usize) -> ClusterSet {
    ClusterSet {
        clusters: dbscan_indices(&m.d, eps, min_pts)
            .into_iter()
            .map(|c| c.into_iter().map(|i| m.ids[i].clone()).collect())
            .collect(),
        noise_as_singletons: true,
    }
}

/// Connected components of the graph with an edge wherever the clamped
/// cosine reaches `tau`.
pub fn coarse_partition(vectors: &[EmbeddingVector], tau: f64) -> Result<Vec<Vec<usize>>, EmbedError> {
    let n = vectors.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if similarity(&vectors[i], &vectors[j])? >= tau {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    Ok(groups)
}

/// Work counters for one `classify` run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub coarse_groups: usize,
    pub truth_table_pairs: usize,
    pub lasso_pairs: usize,
    pub nl_only_pairs: usize,
    /// Single-lasso acceptance checks performed.
    pub lasso_acceptance_calls: usize,
    /// Assertions whose automaton could not be built.
    pub automata_refused: usize,
}

impl ClusterStats {
    fn add(&mut self, o: &ClusterStats) {
        self.coarse_groups += o.coarse_groups;
        self.truth_table_pairs += o.truth_table_pairs;
        self.lasso_pairs += o.lasso_pairs;
        self.nl_only_pairs += o.nl_only_pairs;
        self.lasso_acceptance_calls += o.lasso_acceptance_calls;
        self.automata_refused += o.automata_refused;
    }
}

fn fast_path_atoms(a: &Assertion, b: &Assertion) -> Option<Vec<String>> {
    if !(a.is_propositional() && b.is_propositional()) {
        return None;
    }
    let mut atoms = atomic_propositions(a);
    atoms.extend(atomic_propositions(b));
    (atoms.len() <= TRUTH_TABLE_MAX_ATOMS).then(|| atoms.into_iter().collect())
}

/// Truth-table Jaccard of two propositional assertions over their joint atoms.
pub fn truth_table_similarity(a: &Assertion, b: &Assertion) -> Option<f64> {
    let atoms = fast_path_atoms(a, b)?;
    let x = truth_table_sat_set(a.condition()?, &atoms).ok()?;
    let y = truth_table_sat_set(b.condition()?, &atoms).ok()?;
    Some(x.jaccard(&y))
}

/// Similarity matrix of one coarse group (indices into `corpus`).
fn group_matrix(
    corpus: &[Assertion],
    vectors: &[EmbeddingVector],
    members: &[usize],
    cfg: &Config,
) -> Result<(SimilarityMatrix, ClusterStats), ClusterError> {
    let n = members.len();
    let mut stats = ClusterStats::default();
    let fast = |i: usize, j: usize| -> Option<f64> {
        if !cfg.fast_path {
            return None;
        }
        truth_table_similarity(&corpus[members[i]], &corpus[members[j]])
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let fast_scores = par::map_indexed(pairs.len(), cfg.workers, |k| fast(pairs[k].0, pairs[k].1));

    // members taking part in at least one pair without a fast-path score
    let mut needs_lasso = vec![false; n];
    for (&(i, j), s) in pairs.iter().zip(&fast_scores) {
        if s.is_none() {
            needs_lasso[i] = true;
            needs_lasso[j] = true;
        }
    }
    let lasso_members: Vec<usize> = (0..n).filter(|&i| needs_lasso[i]).collect();
    let mut vectors_lasso: Vec<Option<AcceptanceVector>> = vec![None; n];
    if !lasso_members.is_empty() {
        let atoms: BTreeSet<String> = lasso_members
            .iter()
            .flat_map(|&i| atomic_propositions(&corpus[members[i]]))
            .collect();
        let pool = LassoPool::sample(&atoms, cfg.lasso_samples, cfg.seed, cfg.lasso_bounds);
        let computed = par::map_indexed(lasso_members.len(), cfg.workers, |k| {
            let a = &corpus[members[lasso_members[k]]];
            let ltl = to_ltl(a).ok()?;
            let aut = ltl_to_buchi(&ltl).ok()?;
            acceptance_vector(&aut, &pool).ok()
        });
        for (&i, v) in lasso_members.iter().zip(computed) {
            match &v {
                Some(_) => stats.lasso_acceptance_calls += pool.len(),
                None => stats.automata_refused += 1,
            }
            vectors_lasso[i] = v;
        }
    }

    let mut s_nl = vec![vec![1.0; n]; n];
    let mut s_lasso: Vec<Vec<Option<f64>>> = vec![vec![Some(1.0); n]; n];
    for (&(i, j), fast) in pairs.iter().zip(fast_scores) {
        let nl = similarity(&vectors[members[i]], &vectors[members[j]])?;
        let lasso = match fast {
            Some(s) => {
                stats.truth_table_pairs += 1;
                Some(s)
            }
            None => match (&vectors_lasso[i], &vectors_lasso[j]) {
                (Some(x), Some(y)) => {
                    stats.lasso_pairs += 1;
                    jaccard(x, y).ok()
                }
                _ => None,
            },
        };
        s_nl[i][j] = nl;
        s_nl[j][i] = nl;
        s_lasso[i][j] = lasso;
        s_lasso[j][i] = lasso;
    }
    let ids = members.iter().map(|&i| corpus[i].id.clone()).collect();
    let m = fuse(ids, s_nl, s_lasso, cfg.alpha, cfg.beta)?;
    stats.nl_only_pairs = m.nl_only.len();
    Ok((m, stats))
}

/// Cluster a corpus: coarse semantic groups, then fused similarity and
/// DBSCAN inside each group. Clusters list ids in ascending order and are
/// ordered by their smallest id.
pub fn classify(
    corpus: &[Assertion],
    cfg: &Config,
    embedder: &dyn Embedder,
) -> Result<(ClusterSet, ClusterStats), ClusterError> {
    if cfg.alpha + cfg.beta - 1.0 > 1e-9 || 1.0 - (cfg.alpha + cfg.beta) > 1e-9 {
        return Err(ClusterError::WeightSum {
            alpha: cfg.alpha,
            beta: cfg.beta,
        });
    }
    let mut sorted: Vec<Assertion> = corpus.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(ClusterError::DuplicateId(w[0].id.clone()));
    }
    if sorted.is_empty() {
        return Ok((ClusterSet::default(), ClusterStats::default()));
    }
    let sentences: Vec<_> = sorted.iter().map(render_nl).collect();
    let vectors = embedder.embed(&sentences)?;
    let groups = if cfg.coarse_partition {
        coarse_partition(&vectors, cfg.threshold)?
    } else {
        vec![(0..sorted.len()).collect()]
    };
    let mut stats = ClusterStats {
        coarse_groups: groups.len(),
        ..ClusterStats::default()
    };
    let results = par::map_indexed(groups.len(), cfg.workers, |g| -> Result<_, ClusterError> {
        let members = &groups[g];
        if members.len() == 1 {
            return Ok((vec![vec![members[0]]], ClusterStats::default()));
        }
        let (m, st) = group_matrix(&sorted, &vectors, members, cfg)?;
        let local = dbscan_indices(&m.d, cfg.eps(), cfg.min_pts);
        Ok((
            local.into_iter().map(|c| c.into_iter().map(|i| members[i]).collect()).collect(),
            st,
        ))
    });
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for r in results {
        let (cs, st) = r?;
        stats.add(&st);
        clusters.extend(cs);
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    tracing::debug!(clusters = clusters.len(), groups = stats.coarse_groups, "classified");
    Ok((
        ClusterSet {
            clusters: clusters
                .into_iter()
                .map(|c| c.into_iter().map(|i| sorted[i].id.clone()).collect())
                .collect(),
            noise_as_singletons: true,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(i: usize, n: usize) -> EmbeddingVector {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        EmbeddingVector { values: v }
    }

    #[test]
    fn fuse_arithmetic() {
        let m = fuse(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.9], vec![0.9, 1.0]],
            vec![vec![Some(1.0), Some(0.5)], vec![Some(0.5), Some(1.0)]],
            0.4,
            0.6,
        )
        .unwrap();
        assert!((m.s_fused[0][1] - 0.66).abs() < 1e-12);
        assert!((m.d[0][1] - 0.34).abs() < 1e-12);
        assert_eq!(m.d[0][0], 0.0);
        let bad = fuse(vec![], vec![], vec![], 0.5, 0.6);
        assert!(matches!(bad, Err(ClusterError::WeightSum { .. })));
    }

    #[test]
    fn fuse_without_lasso_uses_nl() {
        let m = fuse(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.7], vec![0.7, 1.0]],
            vec![vec![Some(1.0), None], vec![None, Some(1.0)]],
            0.4,
            0.6,
        )
        .unwrap();
        assert_eq!(m.s_fused[0][1], 0.7);
        assert_eq!(m.nl_only, vec![(0, 1)]);
    }

    #[test]
    fn dbscan_cases() {
        assert_eq!(dbscan_indices(&[vec![0.0, 0.1], vec![0.1, 0.0]], 0.15, 2), vec![vec![0, 1]]);
        let far = vec![vec![0.0, 0.9, 0.9], vec![0.9, 0.0, 0.9], vec![0.9, 0.9, 0.0]];
        assert_eq!(dbscan_indices(&far, 0.15, 2), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn coarse_components() {
        let same = vec![unit(0, 3), unit(0, 3)];
        assert_eq!(coarse_partition(&same, 0.85).unwrap(), vec![vec![0, 1]]);
        let ortho = vec![unit(0, 3), unit(1, 3), unit(2, 3)];
        assert_eq!(coarse_partition(&ortho, 0.85).unwrap().len(), 3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let chain = vec![
            unit(0, 2),
            EmbeddingVector { values: vec![s, s] },
            unit(1, 2),
        ];
        assert_eq!(coarse_partition(&chain, 0.7).unwrap(), vec![vec![0, 1, 2]]);
    }
}
