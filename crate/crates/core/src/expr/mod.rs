//! Scalar expressions in the tangent-bundle variables `x1..xn`, `y1..yn`.
//!
//! An [`Expr`] is an immutable AST over real constants, coordinate variables,
//! the unary operations `neg`, `exp`, `ln`, `sqrt`, `sin`, `cos`, the binary
//! operations `+ - * /`, and `^` with a constant real exponent. Trees are
//! shared through `Arc`, so cloning and differentiation are cheap and the
//! same expression can be evaluated from many threads at once.
//!
//! Equality of expressions is never decided structurally; there is no
//! simplifier beyond folding of literal zeros and ones inside
//! [`Expr::differentiate`]. Callers compare values at sample points instead.

mod diff;
mod eval;
mod parse;
mod random;

pub use parse::parse;
pub use random::random_expr;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A coordinate variable: `X(i)` is the base coordinate `x^(i+1)`, `Y(i)`
/// the fiber coordinate `y^(i+1)`. Indices are 0-based in the API; the
/// surface syntax `x1` names `X(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(f64),
    X(usize),
    Y(usize),
    Neg(Arc<Node>),
    Exp(Arc<Node>),
    Ln(Arc<Node>),
    Sqrt(Arc<Node>),
    Sin(Arc<Node>),
    Cos(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, f64),
}

/// A parsed scalar expression for a fixed dimension `n`.
#[derive(Clone)]
pub struct Expr {
    node: Arc<Node>,
    dim: usize,
}

impl Expr {
    pub(crate) fn from_node(node: Arc<Node>, dim: usize) -> Self {
        Expr { node, dim }
    }

    pub(crate) fn node(&self) -> &Arc<Node> {
        &self.node
    }

    /// The dimension `n` the expression was declared for.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A literal constant. Panics on non-finite values.
    pub fn constant(value: f64, dim: usize) -> Self {
        assert!(value.is_finite(), "expression constants must be finite");
        Expr::from_node(Arc::new(Node::Const(value)), dim)
    }

    /// The base coordinate `x^(i+1)` (0-based `i`). Panics if `i >= dim`.
    pub fn x(i: usize, dim: usize) -> Self {
        assert!(i < dim, "variable index {i} out of range for dimension {dim}");
        Expr::from_node(Arc::new(Node::X(i)), dim)
    }

    /// The fiber coordinate `y^(i+1)` (0-based `i`). Panics if `i >= dim`.
    pub fn y(i: usize, dim: usize) -> Self {
        assert!(i < dim, "variable index {i} out of range for dimension {dim}");
        Expr::from_node(Arc::new(Node::Y(i)), dim)
    }

    fn unary(&self, f: impl FnOnce(Arc<Node>) -> Node) -> Self {
        Expr::from_node(Arc::new(f(self.node.clone())), self.dim)
    }

    fn binary(&self, other: &Expr, f: impl FnOnce(Arc<Node>, Arc<Node>) -> Node) -> Self {
        assert_eq!(
            self.dim, other.dim,
            "cannot combine expressions of dimensions {} and {}",
            self.dim, other.dim
        );
        Expr::from_node(Arc::new(f(self.node.clone(), other.node.clone())), self.dim)
    }

    pub fn neg(&self) -> Self {
        self.unary(Node::Neg)
    }

    pub fn exp(&self) -> Self {
        self.unary(Node::Exp)
    }

    pub fn ln(&self) -> Self {
        self.unary(Node::Ln)
    }

    pub fn sqrt(&self) -> Self {
        self.unary(Node::Sqrt)
    }

    pub fn sin(&self) -> Self {
        self.unary(Node::Sin)
    }

    pub fn cos(&self) -> Self {
        self.unary(Node::Cos)
    }

    pub fn add(&self, other: &Expr) -> Self {
        self.binary(other, Node::Add)
    }

    pub fn sub(&self, other: &Expr) -> Self {
        self.binary(other, Node::Sub)
    }

    pub fn mul(&self, other: &Expr) -> Self {
        self.binary(other, Node::Mul)
    }

    pub fn div(&self, other: &Expr) -> Self {
        self.binary(other, Node::Div)
    }

    /// `self` raised to a constant real exponent. Panics on non-finite `c`.
    pub fn pow(&self, c: f64) -> Self {
        assert!(c.is_finite(), "exponents must be finite");
        Expr::from_node(Arc::new(Node::Pow(self.node.clone(), c)), self.dim)
    }

    /// Structural check: true iff the tree contains no `Y(i)` node.
    pub fn is_x_only(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Y(_) => false,
                Node::Const(_) | Node::X(_) => true,
                Node::Neg(u)
                | Node::Exp(u)
                | Node::Ln(u)
                | Node::Sqrt(u)
                | Node::Sin(u)
                | Node::Cos(u) => walk(u),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a) && walk(b)
                }
                Node::Pow(u, _) => walk(u),
            }
        }
        walk(&self.node)
    }

    /// Evaluate at base coordinates `x` and fiber coordinates `y`.
    ///
    /// NaN or infinite intermediate results are reported as domain errors
    /// naming the offending subtree, never returned as values.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::Dimension {
                context: "expression evaluation".into(),
                expected: self.dim,
                found: x.len().min(y.len()),
            });
        }
        eval::eval_node(&self.node, x, y)
    }

    /// Exact symbolic partial derivative with respect to `v`.
    ///
    /// The result folds literal zeros and ones but is otherwise
    /// unsimplified. Panics if the variable index is out of range.
    pub fn differentiate(&self, v: Var) -> Expr {
        let idx = match v {
            Var::X(i) | Var::Y(i) => i,
        };
        assert!(
            idx < self.dim,
            "variable index {idx} out of range for dimension {}",
            self.dim
        );
        Expr::from_node(diff::derivative(&self.node, v), self.dim)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr[n={}]({})", self.dim, self)
    }
}

// Printing uses the grammar's precedence levels so that `parse(print(e))`
// evaluates identically to `e`. A child is parenthesized when its level is
// below what its position requires.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn node_prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => PREC_ADD,
        Node::Mul(..) | Node::Div(..) => PREC_MUL,
        Node::Neg(_) => PREC_NEG,
        Node::Const(c) if *c < 0.0 => PREC_NEG,
        Node::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

pub(crate) fn write_node(f: &mut fmt::Formatter<'_>, n: &Node, min_prec: u8) -> fmt::Result {
    let prec = node_prec(n);
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match n {
        Node::Const(c) => write!(f, "{c:?}")?,
        Node::X(i) => write!(f, "x{}", i + 1)?,
        Node::Y(i) => write!(f, "y{}", i + 1)?,
        Node::Neg(u) => {
            write!(f, "-")?;
            write_node(f, u, PREC_NEG)?;
        }
        Node::Exp(u) => write_call(f, "exp", u)?,
        Node::Ln(u) => write_call(f, "ln", u)?,
        Node::Sqrt(u) => write_call(f, "sqrt", u)?,
        Node::Sin(u) => write_call(f, "sin", u)?,
        Node::Cos(u) => write_call(f, "cos", u)?,
        Node::Add(a, b) => {
            write_node(f, a, PREC_ADD)?;
            write!(f, " + ")?;
            write_node(f, b, PREC_ADD + 1)?;
        }
        Node::Sub(a, b) => {
            write_node(f, a, PREC_ADD)?;
            write!(f, " - ")?;
            write_node(f, b, PREC_ADD + 1)?;
        }
        Node::Mul(a, b) => {
            write_node(f, a, PREC_MUL)?;
            write!(f, "*")?;
            write_node(f, b, PREC_MUL + 1)?;
        }
        Node::Div(a, b) => {
            write_node(f, a, PREC_MUL)?;
            write!(f, "/")?;
            write_node(f, b, PREC_MUL + 1)?;
        }
        Node::Pow(u, c) => {
            write_node(f, u, PREC_ATOM)?;
            write!(f, "^{c:?}")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

fn write_call(f: &mut fmt::Formatter<'_>, name: &str, arg: &Node) -> fmt::Result {
    write!(f, "{name}(")?;
    write_node(f, arg, 0)?;
    write!(f, ")")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.node, 0)
    }
}

pub(crate) struct NodeDisplay<'a>(pub &'a Node);

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self.0, 0)
    }
}
