use std::sync::Arc;

use super::{Node, NodeDisplay};
use crate::error::{Error, Result};

fn domain(node: &Node, message: &str) -> Error {
    Error::Domain {
        subtree: NodeDisplay(node).to_string(),
        message: message.to_string(),
    }
}

pub(crate) fn eval_node(node: &Arc<Node>, x: &[f64], y: &[f64]) -> Result<f64> {
    let value = match &**node {
        Node::Const(c) => *c,
        Node::X(i) => x[*i],
        Node::Y(i) => y[*i],
        Node::Neg(u) => -eval_node(u, x, y)?,
        Node::Exp(u) => eval_node(u, x, y)?.exp(),
        Node::Ln(u) => {
            let a = eval_node(u, x, y)?;
            if a <= 0.0 {
                return Err(domain(node, "ln of a non-positive value"));
            }
            a.ln()
        }
        Node::Sqrt(u) => {
            let a = eval_node(u, x, y)?;
            if a < 0.0 {
                return Err(domain(node, "sqrt of a negative value"));
            }
            a.sqrt()
        }
        Node::Sin(u) => eval_node(u, x, y)?.sin(),
        Node::Cos(u) => eval_node(u, x, y)?.cos(),
        Node::Add(a, b) => eval_node(a, x, y)? + eval_node(b, x, y)?,
        Node::Sub(a, b) => eval_node(a, x, y)? - eval_node(b, x, y)?,
        Node::Mul(a, b) => eval_node(a, x, y)? * eval_node(b, x, y)?,
        Node::Div(a, b) => {
            let den = eval_node(b, x, y)?;
            if den == 0.0 {
                return Err(domain(node, "division by zero"));
            }
            eval_node(a, x, y)? / den
        }
        Node::Pow(u, c) => eval_node(u, x, y)?.powf(*c),
    };
    if !value.is_finite() {
        return Err(domain(node, "non-finite result"));
    }
    Ok(value)
}
