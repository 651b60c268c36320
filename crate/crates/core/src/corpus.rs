//! Corpus files and the synthetic-redundancy generator.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::assertion::{parse_assertion, print_body, Assertion, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate assertion id `{0}`")]
    DuplicateId(String),
    #[error("assertion `{id}`: {source}")]
    Parse {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("assertion `{id}`: clock field `{field}` disagrees with text clock `{text}`")]
    ClockMismatch { id: String, field: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub name: String,
    pub assertions: Vec<Assertion>,
    /// Source text (without clock) of each assertion, as written.
    pub texts: Vec<String>,
    pub metadata: Map<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    id: String,
    #[serde(default)]
    clock: Option<String>,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawCorpus {
    name: String,
    assertions: Vec<RawEntry>,
    #[serde(default)]
    metadata: Map<String, Value>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, assertions: Vec<Assertion>) -> Self {
        Self {
            name: name.into(),
            texts: assertions.iter().map(print_body).collect(),
            assertions,
            metadata: Map::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    /// Parse a corpus document; every assertion is parsed eagerly.
    pub fn from_json_str(s: &str) -> Result<Self, CorpusError> {
        let raw: RawCorpus = serde_json::from_str(s)?;
        let mut seen = HashSet::new();
        let mut assertions = Vec::with_capacity(raw.assertions.len());
        let mut texts = Vec::with_capacity(raw.assertions.len());
        for e in raw.assertions {
            if !seen.insert(e.id.clone()) {
                return Err(CorpusError::DuplicateId(e.id));
            }
            let mut a = parse_assertion(&e.text, &e.id).map_err(|source| CorpusError::Parse {
                id: e.id.clone(),
                source,
            })?;
            match (&e.clock, &a.clock) {
                (Some(f), Some(t)) if f != t => {
                    return Err(CorpusError::ClockMismatch {
                        id: e.id,
                        field: f.clone(),
                        text: t.clone(),
                    })
                }
                (Some(f), None) => a.clock = Some(f.clone()),
                _ => {}
            }
            assertions.push(a);
            texts.push(e.text);
        }
        Ok(Self {
            name: raw.name,
            assertions,
            texts,
            metadata: raw.metadata,
        })
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawCorpus {
            name: self.name.clone(),
            assertions: self
                .assertions
                .iter()
                .enumerate()
                .map(|(i, a)| RawEntry {
                    id: a.id.clone(),
                    clock: a.clock.clone(),
                    text: self.texts.get(i).cloned().unwrap_or_else(|| print_body(a)),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("corpus serializes")
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let s = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Corpus::from_json_str(&s)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, corpus.to_json_string() + "\n").map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// How a planted assertion was derived from its base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlantKind {
    Duplicate,
    Inflation,
    ConsequentSplit,
    AntecedentSplit,
    Weakening,
}

impl PlantKind {
    pub const ALL: [PlantKind; 5] = [
        PlantKind::Duplicate,
        PlantKind::Inflation,
        PlantKind::ConsequentSplit,
        PlantKind::AntecedentSplit,
        PlantKind::Weakening,
    ];
}

impl fmt::Display for PlantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PlantKind::Duplicate => "duplicate",
            PlantKind::Inflation => "inflation",
            PlantKind::ConsequentSplit => "consequent-split",
            PlantKind::AntecedentSplit => "antecedent-split",
            PlantKind::Weakening => "weakening",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planted {
    pub base: String,
    pub kind: PlantKind,
}

/// Which base each planted assertion came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bases: Vec<String>,
    pub planted: BTreeMap<String, Planted>,
}

impl GroundTruth {
    /// Base id of every assertion; bases map to themselves.
    pub fn class_of(&self, id: &str) -> Option<&str> {
        if let Some(p) = self.planted.get(id) {
            return Some(&p.base);
        }
        self.bases.iter().find(|b| *b == id).map(String::as_str)
    }
}

const STEMS: [&str; 24] = [
    "req", "ack", "valid", "ready", "busy", "en", "gnt", "err", "full", "empty", "rd", "wr", "start", "done", "irq",
    "stall", "flush", "hit", "miss", "lock", "halt", "sel", "load", "idle",
];

#[derive(Debug, Clone)]
struct Lit {
    atom: String,
    positive: bool,
}

impl Lit {
    fn text(&self) -> String {
        if self.positive {
            self.atom.clone()
        } else {
            format!("!{}", self.atom)
        }
    }
}

#[derive(Debug, Clone)]
struct Template {
    items: Vec<Vec<Lit>>,
    delays: Vec<u32>,
    cons_delay: u32,
    cons: Vec<String>,
}

impl Template {
    fn text(&self) -> String {
        let mut s = String::new();
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                s.push_str(&format!(" ##{} ", self.delays[i - 1]));
            }
            let lits: Vec<String> = item.iter().map(Lit::text).collect();
            if lits.len() > 1 {
                s.push_str(&format!("({})", lits.join(" && ")));
            } else {
                s.push_str(&lits[0]);
            }
        }
        s.push_str(" |-> ");
        if self.cons_delay > 0 {
            s.push_str(&format!("##{} ", self.cons_delay));
        }
        if self.cons.len() > 1 {
            s.push_str(&format!("({})", self.cons.join(" && ")));
        } else {
            s.push_str(&self.cons[0]);
        }
        s
    }
}

/// One base family: its text plus the variants its plants are drawn from.
struct Family {
    base: String,
    rng: ChaCha8Rng,
    shape: Shape,
}

enum Shape {
    Implication {
        t: Template,
        fresh: String,
        split_item: usize,
        split_lit: usize,
        antecedent_split: bool,
    },
    Invariant {
        lits: Vec<Lit>,
        fresh: String,
    },
}

fn atom_names(rng: &mut ChaCha8Rng, k: usize, count: usize) -> Vec<String> {
    STEMS
        .choose_multiple(rng, count)
        .map(|s| format!("{s}{k}"))
        .collect()
}

fn implication_family(rng: &mut ChaCha8Rng, k: usize) -> Shape {
    let names = atom_names(rng, k, 5);
    let ante = &names[..3];
    let m = rng.random_range(2..=3usize);
    // four antecedent literals keep the trigger rare
    let mut sizes = vec![1usize; m];
    for _ in m..4 {
        let i = rng.random_range(0..m);
        if sizes[i] < 3 {
            sizes[i] += 1;
        } else {
            sizes[(i + 1) % m] += 1;
        }
    }
    let items: Vec<Vec<Lit>> = sizes
        .iter()
        .map(|&n| {
            ante.choose_multiple(rng, n)
                .map(|a| Lit {
                    atom: a.clone(),
                    positive: rng.random_bool(0.7),
                })
                .collect()
        })
        .collect();
    let delays = (1..m).map(|_| rng.random_range(1..=2)).collect();
    let cons_lit = Lit {
        atom: names[3].clone(),
        positive: rng.random_bool(0.75),
    };
    let t = Template {
        items,
        delays,
        cons_delay: rng.random_range(0..=2),
        cons: vec![cons_lit.text()],
    };
    let split_item = rng.random_range(0..m);
    let split_lit = rng.random_range(0..t.items[split_item].len());
    Shape::Implication {
        t,
        fresh: names[4].clone(),
        split_item,
        split_lit,
        antecedent_split: rng.random_bool(0.5),
    }
}

fn invariant_family(rng: &mut ChaCha8Rng, k: usize) -> Shape {
    let names = atom_names(rng, k, 4);
    let lits = names[..3]
        .iter()
        .enumerate()
        .map(|(i, a)| Lit {
            atom: a.clone(),
            positive: i == 2,
        })
        .collect();
    Shape::Invariant {
        lits,
        fresh: names[3].clone(),
    }
}

fn join_or(lits: &[String]) -> String {
    lits.join(" || ")
}

impl Family {
    fn new(k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = if rng.random_bool(0.15) {
            invariant_family(&mut rng, k)
        } else {
            implication_family(&mut rng, k)
        };
        let base = match &shape {
            Shape::Implication { t, .. } => t.text(),
            Shape::Invariant { lits, .. } => join_or(&lits.iter().map(Lit::text).collect::<Vec<_>>()),
        };
        Self { base, rng, shape }
    }

    fn kinds(&self) -> Vec<PlantKind> {
        match &self.shape {
            // a family carries one split flavor so its plants collapse to one assertion
            Shape::Implication { antecedent_split, .. } => vec![
                PlantKind::Duplicate,
                PlantKind::Inflation,
                if *antecedent_split {
                    PlantKind::AntecedentSplit
                } else {
                    PlantKind::ConsequentSplit
                },
                PlantKind::Weakening,
            ],
            Shape::Invariant { .. } => vec![PlantKind::Duplicate, PlantKind::Inflation, PlantKind::Weakening],
        }
    }

    fn plant(&mut self) -> (PlantKind, String) {
        let kind = *self.kinds().choose(&mut self.rng).expect("kinds");
        let rng = &mut self.rng;
        let text = match &self.shape {
            Shape::Implication {
                t,
                fresh,
                split_item,
                split_lit,
                ..
            } => {
                let mut v = t.clone();
                match kind {
                    PlantKind::Duplicate => {}
                    PlantKind::Inflation => match rng.random_range(0..3) {
                        0 => v.cons = vec![t.cons[0].clone(), t.cons[0].clone()],
                        1 => {
                            let other = &t.items[0][0].atom;
                            v.cons = vec![t.cons[0].clone(), format!("({} || {other})", t.cons[0])];
                        }
                        _ => {
                            let i = rng.random_range(0..v.items.len());
                            let l = v.items[i][0].clone();
                            v.items[i].push(l);
                        }
                    },
                    PlantKind::ConsequentSplit => v.cons = vec![fresh.clone()],
                    PlantKind::AntecedentSplit => {
                        let l = &mut v.items[*split_item][*split_lit];
                        l.positive = !l.positive;
                    }
                    PlantKind::Weakening => {
                        let i = rng.random_range(0..v.items.len());
                        v.items[i].push(Lit {
                            atom: fresh.clone(),
                            positive: rng.random_bool(0.5),
                        });
                    }
                }
                v.text()
            }
            Shape::Invariant { lits, fresh } => {
                let mut parts: Vec<String> = lits.iter().map(Lit::text).collect();
                match kind {
                    PlantKind::Duplicate => {}
                    PlantKind::Inflation => {
                        let i = rng.random_range(0..parts.len());
                        if rng.random_bool(0.5) {
                            parts.push(parts[i].clone());
                        } else {
                            let j = (i + 1) % parts.len();
                            parts[i] = format!("({} || ({} && {}))", parts[i], parts[i], parts[j]);
                        }
                    }
                    _ => parts.push(fresh.clone()),
                }
                join_or(&parts)
            }
        };
        (kind, text)
    }
}

/// `n` base assertions with `r` planted redundancies each. Ids are
/// assigned after shuffling so they carry no family information.
pub fn generate_synthetic(n: usize, r: usize, seed: u64) -> (Corpus, GroundTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (family, planted kind, text)
    let mut entries: Vec<(usize, Option<PlantKind>, String)> = Vec::with_capacity(n * (r + 1));
    for k in 0..n {
        let mut fam = Family::new(k, rng.random());
        entries.push((k, None, fam.base.clone()));
        for _ in 0..r {
            let (kind, text) = fam.plant();
            entries.push((k, Some(kind), text));
        }
    }
    entries.shuffle(&mut rng);
    let width = entries.len().to_string().len().max(3);
    let mut base_ids = vec![String::new(); n];
    let mut assertions = Vec::with_capacity(entries.len());
    let mut texts = Vec::with_capacity(entries.len());
    for (i, (k, kind, text)) in entries.iter().enumerate() {
        let id = format!("s{i:0width$}");
        if kind.is_none() {
            base_ids[*k] = id.clone();
        }
        let mut a = parse_assertion(text, &id).expect("generated text parses");
        a.clock = Some("clk".to_string());
        assertions.push(a);
        texts.push(text.clone());
    }
    let mut truth = GroundTruth::default();
    for (i, (k, kind, _)) in entries.iter().enumerate() {
        if let Some(kind) = kind {
            truth.planted.insert(
                assertions[i].id.clone(),
                Planted {
                    base: base_ids[*k].clone(),
                    kind: *kind,
                },
            );
        }
    }
    truth.bases = base_ids;
    truth.bases.sort();
    let mut corpus = Corpus::new(format!("synthetic-n{n}-r{r}-s{seed}"), assertions);
    corpus.texts = texts;
    corpus.metadata.insert("generator".into(), Value::from("synthetic"));
    corpus.metadata.insert("n".into(), Value::from(n));
    corpus.metadata.insert("r".into(), Value::from(r));
    corpus.metadata.insert("seed".into(), Value::from(seed));
    (corpus, truth)
}
