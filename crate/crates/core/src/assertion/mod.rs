//! The bounded assertion language: AST, parser, printer and canonical keys.

mod ast;
mod key;
mod parse;
mod print;

pub use ast::{atomic_propositions, is_identifier, Assertion, AssertionKind, BoolExpr, Delay, Sequence};
pub use key::{
    assertion_key, canonical_key, canonicalize, normalize, normalize_assertion, normalize_sequence,
    sequence_key, CanonicalKey,
};
pub use parse::{parse_assertion, parse_bool_expr, ParseError};
pub use print::{print_assertion, print_body, print_expr};
