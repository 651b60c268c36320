//! Natural-language rendering of assertions and sentence embedders.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assertion::{normalize_assertion, Assertion, BoolExpr, Delay, Sequence};
use crate::config::EmbedderChoice;
use crate::util::stable_hash;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("empty embedding batch")]
    EmptyBatch,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("embedding service failed after {attempts} attempts: {message}")]
    Remote { attempts: usize, message: String },
    #[error("remote embedding support is not compiled in")]
    RemoteUnavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlSentence {
    pub text: String,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Scale to unit L2 norm (zero vectors are left as is).
    pub fn normalized(mut self) -> Self {
        let norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= norm);
        }
        self
    }
}

pub fn cosine(v1: &EmbeddingVector, v2: &EmbeddingVector) -> Result<f64, EmbedError> {
    if v1.dim() != v2.dim() {
        return Err(EmbedError::DimMismatch(v1.dim(), v2.dim()));
    }
    Ok(v1.values.iter().zip(&v2.values).map(|(a, b)| a * b).sum())
}

/// Cosine clamped to `[0, 1]`.
pub fn similarity(v1: &EmbeddingVector, v2: &EmbeddingVector) -> Result<f64, EmbedError> {
    Ok(cosine(v1, v2)?.clamp(0.0, 1.0))
}

fn render_expr(e: &BoolExpr, nested: bool, out: &mut String) {
    match e {
        BoolExpr::Atom(a) => out.push_str(a),
        BoolExpr::Const(b) => out.push_str(if *b { "true" } else { "false" }),
        BoolExpr::Not(c) => {
            out.push_str("not ");
            render_expr(c, true, out);
        }
        BoolExpr::And(cs) | BoolExpr::Or(cs) => {
            let word = if matches!(e, BoolExpr::And(_)) { " and " } else { " or " };
            if nested {
                out.push('(');
            }
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(word);
                }
                render_expr(c, true, out);
            }
            if nested {
                out.push(')');
            }
        }
    }
}

fn expr_text(e: &BoolExpr) -> String {
    let mut s = String::new();
    render_expr(e, false, &mut s);
    s
}

fn verb(e: &BoolExpr) -> &'static str {
    match e {
        BoolExpr::And(_) => "hold",
        _ => "holds",
    }
}

fn after(d: Delay) -> String {
    match (d.lo(), d.hi()) {
        (1, 1) => "after 1 cycle".to_string(),
        (n, m) if n == m => format!("after {n} cycles"),
        (n, m) => format!("after {n} to {m} cycles"),
    }
}

/// Items of a sequence with the delay leading to each; a `1` head followed
/// by more items is skipped, carrying the first delay.
fn timed_items(s: &Sequence) -> Vec<(Option<Delay>, &BoolExpr)> {
    let mut out = Vec::new();
    if !(s.head.is_true() && !s.tail.is_empty()) {
        out.push((None, &s.head));
    }
    out.extend(s.tail.iter().map(|(d, e)| (Some(*d), e)));
    out
}

fn render_rest(items: &[(Option<Delay>, &BoolExpr)], out: &mut String) {
    for (d, e) in items {
        out.push_str(", then ");
        out.push_str(&expr_text(e));
        if let Some(d) = d {
            out.push(' ');
            out.push_str(&after(*d));
        }
    }
}

/// Deterministic template sentence for an assertion.
pub fn render_nl(a: &Assertion) -> NlSentence {
    let a = normalize_assertion(a);
    let mut out = String::new();
    if let Some(clk) = &a.clock {
        out.push_str("at posedge ");
        out.push_str(clk);
        out.push_str(", ");
    }
    match a.condition() {
        Some(cond) => {
            out.push_str(&expr_text(cond));
            out.push_str(" must always hold.");
        }
        None => {
            let pre = timed_items(&a.antecedent);
            let (d0, e0) = pre[0];
            out.push_str("if ");
            out.push_str(&expr_text(e0));
            out.push(' ');
            out.push_str(verb(e0));
            if let Some(d) = d0 {
                out.push(' ');
                out.push_str(&after(d));
            }
            render_rest(&pre[1..], &mut out);
            let post = timed_items(&a.consequent);
            let (d0, e0) = post[0];
            out.push_str(", then ");
            out.push_str(&expr_text(e0));
            out.push_str(" must also hold ");
            match d0 {
                Some(d) if d != Delay::fixed(0) => out.push_str(&after(d)),
                _ => out.push_str("in the same cycle"),
            }
            render_rest(&post[1..], &mut out);
            out.push('.');
        }
    }
    NlSentence {
        text: out,
        source_id: a.id.clone(),
    }
}

/// Embedding backend. Implementations return one unit-norm vector per sentence.
pub trait Embedder: Send + Sync {
    fn embed(&self, batch: &[NlSentence]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn describe(&self) -> String;
}

/// Signed feature hashing of unigrams and bigrams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

/// Split on whitespace and punctuation; identifier characters are kept.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .collect()
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let tokens = tokenize(text);
        let mut values = vec![0.0; self.dim];
        let mut add = |feature: String| {
            let h = stable_hash(feature.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            values[(h % self.dim as u64) as usize] += sign;
        };
        for t in &tokens {
            add(format!("u:{t}"));
        }
        for w in tokens.windows(2) {
            add(format!("b:{} {}", w[0], w[1]));
        }
        EmbeddingVector { values }.normalized()
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, batch: &[NlSentence]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if batch.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        Ok(batch.iter().map(|s| self.embed_text(&s.text)).collect())
    }

    fn describe(&self) -> String {
        format!("hash-{}", self.dim)
    }
}

#[cfg(feature = "remote-embed")]
pub use remote::RemoteEmbedder;

#[cfg(feature = "remote-embed")]
mod remote {
    use std::time::Duration;

    use serde::{Deserialize, Serialize};

    use super::{EmbedError, Embedder, EmbeddingVector, NlSentence};

    #[derive(Serialize)]
    struct Request<'a> {
        texts: Vec<&'a str>,
    }

    #[derive(Deserialize)]
    struct Response {
        vectors: Vec<Vec<f64>>,
    }

    /// Client for an HTTP embedding service (`POST /embed`).
    #[derive(Debug, Clone)]
    pub struct RemoteEmbedder {
        pub endpoint: String,
        pub batch_size: usize,
        pub window: usize,
        pub attempts: usize,
        pub timeout: Duration,
    }

    impl RemoteEmbedder {
        /// `url` is either the full endpoint or a base URL to which `/embed`
        /// is appended.
        pub fn new(url: &str) -> Self {
            let url = url.trim_end_matches('/');
            let endpoint = if url.ends_with("/embed") {
                url.to_string()
            } else {
                format!("{url}/embed")
            };
            Self {
                endpoint,
                batch_size: 64,
                window: 4,
                attempts: 3,
                timeout: Duration::from_secs(30),
            }
        }

        fn post_once(&self, client: &reqwest::blocking::Client, texts: &[&str]) -> Result<Vec<EmbeddingVector>, String> {
            let resp = client
                .post(&self.endpoint)
                .json(&Request { texts: texts.to_vec() })
                .send()
                .map_err(|e| e.to_string())?;
            let status = resp.status();
            if !status.is_success() {
                return Err(format!("HTTP {status}"));
            }
            let body: Response = resp.json().map_err(|e| format!("malformed response: {e}"))?;
            if body.vectors.len() != texts.len() {
                return Err(format!("{} vectors for {} texts", body.vectors.len(), texts.len()));
            }
            let dim = body.vectors.first().map_or(0, Vec::len);
            if dim == 0 || body.vectors.iter().any(|v| v.len() != dim) {
                return Err("inconsistent vector dimensions".to_string());
            }
            Ok(body
                .vectors
                .into_iter()
                .map(|values| EmbeddingVector { values }.normalized())
                .collect())
        }

        fn post(&self, client: &reqwest::blocking::Client, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            let mut last = String::new();
            for attempt in 0..self.attempts.max(1) {
                match self.post_once(client, texts) {
                    Ok(v) => return Ok(v),
                    Err(e) => {
                        tracing::warn!(attempt = attempt + 1, error = %e, "embedding request failed");
                        last = e;
                        std::thread::sleep(Duration::from_millis(50 << attempt));
                    }
                }
            }
            Err(EmbedError::Remote {
                attempts: self.attempts.max(1),
                message: last,
            })
        }
    }

    impl Embedder for RemoteEmbedder {
        fn embed(&self, batch: &[NlSentence]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            if batch.is_empty() {
                return Err(EmbedError::EmptyBatch);
            }
            let client = reqwest::blocking::Client::builder()
                .timeout(self.timeout)
                .build()
                .map_err(|e| EmbedError::Remote {
                    attempts: 0,
                    message: e.to_string(),
                })?;
            let texts: Vec<&str> = batch.iter().map(|s| s.text.as_str()).collect();
            let chunks: Vec<&[&str]> = texts.chunks(self.batch_size.max(1)).collect();
            let mut out = Vec::with_capacity(batch.len());
            for window in chunks.chunks(self.window.max(1)) {
                let results: Vec<_> = std::thread::scope(|s| {
                    let handles: Vec<_> = window
                        .iter()
                        .map(|chunk| {
                            let client = &client;
                            s.spawn(move || self.post(client, chunk))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("embedding worker panicked")).collect()
                });
                for r in results {
                    out.extend(r?);
                }
            }
            let dim = out[0].dim();
            if out.iter().any(|v| v.dim() != dim) {
                return Err(EmbedError::Remote {
                    attempts: 1,
                    message: "dimension differs between batches".to_string(),
                });
            }
            Ok(out)
        }

        fn describe(&self) -> String {
            format!("remote {}", self.endpoint)
        }
    }
}

/// The embedder selected by `choice`.
pub fn build_embedder(choice: &EmbedderChoice, dim: usize) -> Result<Box<dyn Embedder>, EmbedError> {
    match choice {
        EmbedderChoice::Hash => Ok(Box::new(HashEmbedder::new(dim))),
        #[cfg(feature = "remote-embed")]
        EmbedderChoice::Remote(url) => Ok(Box::new(RemoteEmbedder::new(url))),
        #[cfg(not(feature = "remote-embed"))]
        EmbedderChoice::Remote(_) => Err(EmbedError::RemoteUnavailable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertion::parse_assertion;

    fn nl(s: &str) -> String {
        render_nl(&parse_assertion(s, "x").unwrap()).text
    }

    #[test]
    fn templates() {
        assert_eq!(nl("a && b |-> c"), "if a and b hold, then c must also hold in the same cycle.");
        assert_eq!(nl("a |-> ##2 c"), "if a holds, then c must also hold after 2 cycles.");
        assert_eq!(nl("x && !x"), "x and not x must always hold.");
        assert_eq!(nl("a |-> ##1 b"), "if a holds, then b must also hold after 1 cycle.");
        assert_eq!(
            nl("@(posedge clk) a ##[1:2] b |-> c ##1 !(d || e)"),
            "at posedge clk, if a holds, then b after 1 to 2 cycles, then c must also hold in the same cycle, then not (d or e) after 1 cycle."
        );
    }

    #[test]
    fn hash_embedding_basics() {
        let h = HashEmbedder::default();
        let v = h.embed_text("if a holds, then c must also hold in the same cycle.");
        let w = h.embed_text("if b holds, then c must also hold in the same cycle.");
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-9);
        assert!(cosine(&v, &w).unwrap() < 1.0);
        assert!(h.embed(&[]).is_err());
    }

    #[test]
    fn cosine_edges() {
        let e = |v: Vec<f64>| EmbeddingVector { values: v };
        assert_eq!(cosine(&e(vec![1.0, 0.0]), &e(vec![0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(cosine(&e(vec![1.0, 0.0]), &e(vec![-1.0, 0.0])).unwrap(), -1.0);
        assert_eq!(similarity(&e(vec![1.0, 0.0]), &e(vec![-1.0, 0.0])).unwrap(), 0.0);
        assert!(matches!(cosine(&e(vec![1.0]), &e(vec![1.0, 0.0])), Err(EmbedError::DimMismatch(1, 2))));
    }
}
