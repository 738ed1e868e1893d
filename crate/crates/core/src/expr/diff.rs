//! Derivative rules with folding of literal zeros and ones.
//!
//! Subtrees of the input are shared into the derivative through `Arc`, so
//! differentiating does not copy the original tree.

use std::sync::Arc;

use super::{Node, Var};

fn constant(c: f64) -> Arc<Node> {
    Arc::new(Node::Const(c))
}

fn is_zero(n: &Node) -> bool {
    matches!(n, Node::Const(c) if *c == 0.0)
}

fn is_one(n: &Node) -> bool {
    matches!(n, Node::Const(c) if *c == 1.0)
}

fn add_s(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Arc::new(Node::Add(a, b))
    }
}

fn sub_s(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg_s(b)
    } else {
        Arc::new(Node::Sub(a, b))
    }
}

fn neg_s(a: Arc<Node>) -> Arc<Node> {
    if is_zero(&a) {
        a
    } else {
        Arc::new(Node::Neg(a))
    }
}

fn mul_s(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_zero(&a) || is_one(&b) {
        a
    } else if is_zero(&b) || is_one(&a) {
        b
    } else {
        Arc::new(Node::Mul(a, b))
    }
}

fn div_s(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_zero(&a) || is_one(&b) {
        a
    } else {
        Arc::new(Node::Div(a, b))
    }
}

fn pow_s(u: Arc<Node>, c: f64) -> Arc<Node> {
    if c == 1.0 {
        u
    } else if c == 0.0 {
        constant(1.0)
    } else {
        Arc::new(Node::Pow(u, c))
    }
}

pub(crate) fn derivative(node: &Arc<Node>, v: Var) -> Arc<Node> {
    match &**node {
        Node::Const(_) => constant(0.0),
        Node::X(i) => constant(if v == Var::X(*i) { 1.0 } else { 0.0 }),
        Node::Y(i) => constant(if v == Var::Y(*i) { 1.0 } else { 0.0 }),
        Node::Neg(u) => neg_s(derivative(u, v)),
        Node::Exp(u) => mul_s(node.clone(), derivative(u, v)),
        Node::Ln(u) => div_s(derivative(u, v), u.clone()),
        Node::Sqrt(u) => div_s(derivative(u, v), mul_s(constant(2.0), node.clone())),
        Node::Sin(u) => mul_s(Arc::new(Node::Cos(u.clone())), derivative(u, v)),
        Node::Cos(u) => neg_s(mul_s(Arc::new(Node::Sin(u.clone())), derivative(u, v))),
        Node::Add(a, b) => add_s(derivative(a, v), derivative(b, v)),
        Node::Sub(a, b) => sub_s(derivative(a, v), derivative(b, v)),
        Node::Mul(a, b) => add_s(
            mul_s(derivative(a, v), b.clone()),
            mul_s(a.clone(), derivative(b, v)),
        ),
        Node::Div(a, b) => div_s(
            sub_s(
                mul_s(derivative(a, v), b.clone()),
                mul_s(a.clone(), derivative(b, v)),
            ),
            Arc::new(Node::Pow(b.clone(), 2.0)),
        ),
        Node::Pow(u, c) => mul_s(
            mul_s(constant(*c), pow_s(u.clone(), c - 1.0)),
            derivative(u, v),
        ),
    }
}
