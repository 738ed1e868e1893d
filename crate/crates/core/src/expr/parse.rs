//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" exponent)*            left-associative
//! exponent:= "-" exponent | atom             must fold to a constant
//! atom    := number | variable | func "(" expr ")" | "(" expr ")"
//! ```
//!
//! Variables are `x<k>` / `y<k>` with a decimal index in `1..=n`; functions
//! are `exp`, `ln`, `sqrt`, `sin`, `cos`; numbers are decimal or scientific.
//! Whitespace is insignificant. Error offsets are 1-based byte positions
//! (end of input reports `len + 1`).

use std::sync::Arc;

use super::{Expr, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize, // 1-based byte offset of the token start
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let c = bytes[pos];
        let offset = pos + 1;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                pos += 1;
            }
            b'+' => {
                out.push(Token { tok: Tok::Plus, offset });
                pos += 1;
            }
            b'-' => {
                out.push(Token { tok: Tok::Minus, offset });
                pos += 1;
            }
            b'*' => {
                out.push(Token { tok: Tok::Star, offset });
                pos += 1;
            }
            b'/' => {
                out.push(Token { tok: Tok::Slash, offset });
                pos += 1;
            }
            b'^' => {
                out.push(Token { tok: Tok::Caret, offset });
                pos += 1;
            }
            b'(' => {
                out.push(Token { tok: Tok::LParen, offset });
                pos += 1;
            }
            b')' => {
                out.push(Token { tok: Tok::RParen, offset });
                pos += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = pos;
                while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                    pos += 1;
                }
                // optional exponent part
                if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                    let mut probe = pos + 1;
                    if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
                        probe += 1;
                    }
                    if probe < bytes.len() && bytes[probe].is_ascii_digit() {
                        pos = probe;
                        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                            pos += 1;
                        }
                    }
                }
                let text = &src[start..pos];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(offset, format!("invalid number `{text}`")))?;
                if !value.is_finite() {
                    return Err(syntax(offset, format!("number `{text}` out of range")));
                }
                out.push(Token { tok: Tok::Num(value), offset });
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = pos;
                while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric()) {
                    pos += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..pos].to_string()),
                    offset,
                });
            }
            _ => {
                return Err(syntax(offset, format!("unexpected character `{}`", &src[pos..pos + 1])));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: bytes.len() + 1,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.advance();
                    lhs = Arc::new(Node::Add(lhs, self.term()?));
                }
                Tok::Minus => {
                    self.advance();
                    lhs = Arc::new(Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.advance();
                    lhs = Arc::new(Node::Mul(lhs, self.unary()?));
                }
                Tok::Slash => {
                    self.advance();
                    lhs = Arc::new(Node::Div(lhs, self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>> {
        if self.peek().tok == Tok::Minus {
            self.advance();
            Ok(Arc::new(Node::Neg(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Arc<Node>> {
        let mut base = self.atom()?;
        while self.peek().tok == Tok::Caret {
            self.advance();
            let exp_offset = self.peek().offset;
            let exp_node = self.exponent()?;
            let folded = fold_constant(&exp_node)
                .ok_or_else(|| syntax(exp_offset, "exponent must be a constant expression"))?;
            let c = folded.map_err(|e| {
                syntax(exp_offset, format!("exponent does not fold to a constant: {e}"))
            })?;
            base = Arc::new(Node::Pow(base, c));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Arc<Node>> {
        if self.peek().tok == Tok::Minus {
            self.advance();
            Ok(Arc::new(Node::Neg(self.exponent()?)))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<Arc<Node>> {
        let token = self.advance();
        match token.tok {
            Tok::Num(v) => Ok(Arc::new(Node::Const(v))),
            Tok::Ident(name) => self.ident(&name, token.offset),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.advance();
                if close.tok != Tok::RParen {
                    return Err(syntax(close.offset, "expected `)`"));
                }
                Ok(inner)
            }
            _ => Err(syntax(token.offset, "expected an expression")),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Arc<Node>> {
        match name {
            "exp" | "ln" | "sqrt" | "sin" | "cos" => {
                let open = self.advance();
                if open.tok != Tok::LParen {
                    return Err(syntax(open.offset, format!("expected `(` after `{name}`")));
                }
                let arg = self.expr()?;
                let close = self.advance();
                if close.tok != Tok::RParen {
                    return Err(syntax(close.offset, "expected `)`"));
                }
                let node = match name {
                    "exp" => Node::Exp(arg),
                    "ln" => Node::Ln(arg),
                    "sqrt" => Node::Sqrt(arg),
                    "sin" => Node::Sin(arg),
                    _ => Node::Cos(arg),
                };
                Ok(Arc::new(node))
            }
            _ => {
                let mut chars = name.chars();
                let head = chars.next();
                let rest: String = chars.collect();
                let is_var = matches!(head, Some('x') | Some('y'))
                    && !rest.is_empty()
                    && rest.bytes().all(|b| b.is_ascii_digit());
                if !is_var {
                    return Err(syntax(offset, format!("unknown identifier `{name}`")));
                }
                let index: usize = rest
                    .parse()
                    .map_err(|_| syntax(offset, format!("invalid variable index in `{name}`")))?;
                if index == 0 || index > self.dim {
                    return Err(syntax(
                        offset,
                        format!("variable index {index} outside 1..{}", self.dim),
                    ));
                }
                let node = if head == Some('x') {
                    Node::X(index - 1)
                } else {
                    Node::Y(index - 1)
                };
                Ok(Arc::new(node))
            }
        }
    }
}

/// Evaluates a variable-free subtree; `None` if it contains a variable,
/// `Some(Err(..))` if folding hits a domain error.
fn fold_constant(node: &Arc<Node>) -> Option<Result<f64>> {
    fn has_var(n: &Node) -> bool {
        match n {
            Node::X(_) | Node::Y(_) => true,
            Node::Const(_) => false,
            Node::Neg(u) | Node::Exp(u) | Node::Ln(u) | Node::Sqrt(u) | Node::Sin(u)
            | Node::Cos(u) => has_var(u),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                has_var(a) || has_var(b)
            }
            Node::Pow(u, _) => has_var(u),
        }
    }
    if has_var(node) {
        None
    } else {
        Some(super::eval::eval_node(node, &[], &[]))
    }
}

/// Parse `text` as an expression over `x1..x<n>`, `y1..y<n>`.
pub fn parse(text: &str, dim: usize) -> Result<Expr> {
    if dim == 0 {
        return Err(Error::Dimension {
            context: "expression parsing".into(),
            expected: 1,
            found: 0,
        });
    }
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, dim };
    let node = parser.expr()?;
    let end = parser.advance();
    if end.tok != Tok::Eof {
        return Err(syntax(end.offset, "unexpected trailing input"));
    }
    Ok(Expr::from_node(node, dim))
}
