//! Reduction of clocked implication assertion corpora.
//!
//! Assertions are parsed into a small SVA-like language, grouped by a fused
//! linguistic and automata-behavioral similarity, and each group is shrunk by
//! a Monte Carlo tree search over five semantics-preserving rewrite rules.

pub mod assertion;
pub mod cluster;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod mcts;
pub mod omega;
pub mod par;
pub mod pipeline;
pub mod rules;
pub mod sat;
pub mod temporal;
pub mod util;

pub use assertion::{parse_assertion, print_assertion, Assertion, BoolExpr};
pub use config::Config;
