//! Recursive-descent parser for the assertion language.
//!
//! ```text
//! assertion := [clock] ( seq "|->" seq | seq "|=>" seq | boolexpr ) ;
//! clock     := "@(posedge" IDENT ")" ;
//! seq       := ["##" delay] item { "##" delay item } ;
//! item      := boolexpr | "(" seq ")" ;
//! delay     := INT | "[" INT ":" INT "]" ;
//! boolexpr  := and { ("||"|"|") and } ;
//! and       := unary { ("&&"|"&") unary } ;
//! unary     := "!" unary | "(" boolexpr ")" | IDENT | "1" | "0" ;
//! ```
//!
//! A sequence may start with a delay (`##1 b` is `1 ##1 b`) and a
//! parenthesized sub-sequence is spliced into the enclosing one.

use thiserror::Error;

use super::ast::{Assertion, BoolExpr, Delay, Sequence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    At,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    HashHash,
    Not,
    And,
    Or,
    Overlap,
    NonOverlap,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::At => "`@`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::HashHash => "`##`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Overlap => "`|->`".into(),
            Tok::NonOverlap => "`|=>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok, n: usize, i: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            *i += n;
            *col += n;
        };
        let peek = |k: usize| chars.get(i + k).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '@' => push(Tok::At, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            '!' => push(Tok::Not, 1, &mut i, &mut col),
            '#' if peek(1) == Some('#') => push(Tok::HashHash, 2, &mut i, &mut col),
            '&' if peek(1) == Some('&') => push(Tok::And, 2, &mut i, &mut col),
            '&' => push(Tok::And, 1, &mut i, &mut col),
            '|' if peek(1) == Some('-') && peek(2) == Some('>') => {
                push(Tok::Overlap, 3, &mut i, &mut col)
            }
            '|' if peek(1) == Some('=') && peek(2) == Some('>') => {
                push(Tok::NonOverlap, 3, &mut i, &mut col)
            }
            '|' if peek(1) == Some('|') => push(Tok::Or, 2, &mut i, &mut col),
            '|' => push(Tok::Or, 1, &mut i, &mut col),
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits
                    .parse::<u32>()
                    .map_err(|_| err(tl, tc, format!("integer `{digits}` out of range")))?;
                col += i - start;
                out.push(Token {
                    tok: Tok::Int(n),
                    line: tl,
                    column: tc,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: tl,
                    column: tc,
                });
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// A parsed `(...)` group or operand: either plain boolean or a sequence.
enum Piece {
    Expr(BoolExpr),
    Seq(Sequence),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let t = self.here();
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn clock(&mut self) -> Result<Option<String>, ParseError> {
        if *self.peek() != Tok::At {
            return Ok(None);
        }
        self.bump();
        self.expect(Tok::LParen)?;
        match self.bump() {
            Tok::Ident(k) if k == "posedge" => {}
            other => {
                return Err(self.error(format!("expected `posedge`, found {}", other.describe())))
            }
        }
        let name = match self.bump() {
            Tok::Ident(n) => n,
            other => {
                return Err(self.error(format!(
                    "expected clock name, found {}",
                    other.describe()
                )))
            }
        };
        self.expect(Tok::RParen)?;
        Ok(Some(name))
    }

    fn delay(&mut self) -> Result<Delay, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Delay::fixed(n))
            }
            Tok::LBracket => {
                self.bump();
                let at = self.here().clone();
                let lo = self.int()?;
                self.expect(Tok::Colon)?;
                let hi = self.int()?;
                self.expect(Tok::RBracket)?;
                Delay::new(lo, hi).ok_or(ParseError {
                    line: at.line,
                    column: at.column,
                    message: format!("delay range [{lo}:{hi}] has upper bound below lower bound"),
                })
            }
            other => Err(self.error(format!("expected delay, found {}", other.describe()))),
        }
    }

    fn int(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            other => Err(self.error(format!("expected integer, found {}", other.describe()))),
        }
    }

    fn seq(&mut self) -> Result<Sequence, ParseError> {
        let mut seq = if *self.peek() == Tok::HashHash {
            Sequence::single(BoolExpr::Const(true))
        } else {
            self.item()?
        };
        while *self.peek() == Tok::HashHash {
            self.bump();
            let d = self.delay()?;
            let next = self.item()?;
            seq = seq.concat(d, next);
        }
        Ok(seq)
    }

    fn item(&mut self) -> Result<Sequence, ParseError> {
        match self.or()? {
            Piece::Expr(e) => Ok(Sequence::single(e)),
            Piece::Seq(s) => Ok(s),
        }
    }

    fn expr_of(&self, p: Piece) -> Result<BoolExpr, ParseError> {
        match p {
            Piece::Expr(e) => Ok(e),
            Piece::Seq(_) => Err(self.error("sequence used as boolean operand")),
        }
    }

    fn or(&mut self) -> Result<Piece, ParseError> {
        let first = self.and()?;
        if *self.peek() != Tok::Or {
            return Ok(first);
        }
        let mut kids = vec![self.expr_of(first)?];
        while *self.peek() == Tok::Or {
            self.bump();
            let p = self.and()?;
            kids.push(self.expr_of(p)?);
        }
        Ok(Piece::Expr(BoolExpr::Or(kids)))
    }

    fn and(&mut self) -> Result<Piece, ParseError> {
        let first = self.unary()?;
        if *self.peek() != Tok::And {
            return Ok(first);
        }
        let mut kids = vec![self.expr_of(first)?];
        while *self.peek() == Tok::And {
            self.bump();
            let p = self.unary()?;
            kids.push(self.expr_of(p)?);
        }
        Ok(Piece::Expr(BoolExpr::And(kids)))
    }

    fn unary(&mut self) -> Result<Piece, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                let p = self.unary()?;
                Ok(Piece::Expr(BoolExpr::negated(self.expr_of(p)?)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.seq()?;
                self.expect(Tok::RParen)?;
                if inner.tail.is_empty() {
                    Ok(Piece::Expr(inner.head))
                } else {
                    Ok(Piece::Seq(inner))
                }
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Piece::Expr(BoolExpr::Atom(name)))
            }
            Tok::Int(0) => {
                self.bump();
                Ok(Piece::Expr(BoolExpr::Const(false)))
            }
            Tok::Int(1) => {
                self.bump();
                Ok(Piece::Expr(BoolExpr::Const(true)))
            }
            Tok::Int(n) => Err(self.error(format!("only `0` and `1` are boolean constants, found `{n}`"))),
            Tok::Eof => Err(self.error("empty expression")),
            other => Err(self.error(format!("expected expression, found {}", other.describe()))),
        }
    }
}

/// Parse one assertion. `a |=> b` is desugared to `a |-> ##1 b`; text without
/// an implication operator is a propositional assertion.
pub fn parse_assertion(text: &str, id: &str) -> Result<Assertion, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let clock = p.clock()?;
    if *p.peek() == Tok::Eof {
        return Err(p.error("empty expression"));
    }
    let lhs = p.seq()?;
    let out = match p.peek() {
        Tok::Overlap | Tok::NonOverlap => {
            let shift = *p.peek() == Tok::NonOverlap;
            p.bump();
            if *p.peek() == Tok::Eof {
                return Err(p.error("empty consequent"));
            }
            let mut rhs = p.seq()?;
            if shift {
                rhs = Sequence::single(BoolExpr::Const(true)).concat(Delay::fixed(1), rhs);
            }
            Assertion::implication(id, clock, lhs, rhs)
        }
        Tok::Eof => {
            if !lhs.tail.is_empty() {
                return Err(p.error("a sequence needs an implication operator"));
            }
            Assertion::propositional(id, clock, lhs.head)
        }
        other => {
            return Err(p.error(format!(
                "expected `|->`, `|=>` or end of input, found {}",
                other.describe()
            )))
        }
    };
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("trailing input: {}", p.peek().describe())));
    }
    Ok(out)
}

/// Parse a standalone boolean expression.
pub fn parse_bool_expr(text: &str) -> Result<BoolExpr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let piece = p.or()?;
    let e = p.expr_of(piece)?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("trailing input: {}", p.peek().describe())));
    }
    Ok(e)
}
