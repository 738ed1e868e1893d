//! Points of the tangent bundle, scalar and d-tensor fields, and the two
//! derivative engines (exact symbolic and central finite difference).
//!
//! The artifact works in a single fixed chart `(x^i, y^i)` on `TM`. All
//! indices in this API are 0-based; the surface syntax `x1` names base
//! coordinate 0. Multi-index components of a [`DTensorField`] are stored
//! row-major with upper indices first.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};

/// A point `(x, y)` of the tangent bundle in the fixed chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointTM {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PointTM {
    /// Panics on empty or mismatched coordinate vectors and on non-finite
    /// entries; those are programming errors, not data errors.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(!x.is_empty(), "dimension must be at least 1");
        assert_eq!(x.len(), y.len(), "x and y must have the same dimension");
        assert!(
            x.iter().chain(y.iter()).all(|v| v.is_finite()),
            "point coordinates must be finite"
        );
        PointTM { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Copy with base coordinate `i` shifted by `delta`.
    pub fn shift_x(&self, i: usize, delta: f64) -> Self {
        let mut p = self.clone();
        p.x[i] += delta;
        p
    }

    /// Copy with fiber coordinate `i` shifted by `delta`.
    pub fn shift_y(&self, i: usize, delta: f64) -> Self {
        let mut p = self.clone();
        p.y[i] += delta;
        p
    }

    /// Copy with every fiber coordinate scaled by `lambda`.
    pub fn scale_y(&self, lambda: f64) -> Self {
        PointTM {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }
}

impl fmt::Display for PointTM {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(x = {:?}, y = {:?})", self.x, self.y)
    }
}

type Callable = Arc<dyn Fn(&PointTM) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
enum Backing {
    Expr(Expr),
    Callable {
        f: Callable,
        x_only: bool,
        label: String,
    },
}

/// A real-valued field on `TM`, backed either by a parsed expression or by
/// an opaque callable. Immutable after construction.
#[derive(Clone)]
pub struct ScalarField {
    backing: Backing,
    dim: usize,
}

impl ScalarField {
    pub fn from_expr(expr: Expr) -> Self {
        let dim = expr.dim();
        ScalarField {
            backing: Backing::Expr(expr),
            dim,
        }
    }

    /// Wrap an opaque callable. The caller asserts `x_only`; there is no
    /// structural check for callables.
    pub fn from_fn(
        dim: usize,
        x_only: bool,
        label: impl Into<String>,
        f: impl Fn(&PointTM) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            backing: Backing::Callable {
                f: Arc::new(f),
                x_only,
                label: label.into(),
            },
            dim,
        }
    }

    pub fn zero(dim: usize) -> Self {
        ScalarField::from_expr(Expr::constant(0.0, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// For expression backings this is the structural check; for callables
    /// it is the flag the constructor was given.
    pub fn is_x_only(&self) -> bool {
        match &self.backing {
            Backing::Expr(e) => e.is_x_only(),
            Backing::Callable { x_only, .. } => *x_only,
        }
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.backing {
            Backing::Expr(e) => Some(e),
            Backing::Callable { .. } => None,
        }
    }

    pub fn eval(&self, p: &PointTM) -> Result<f64> {
        if p.dim() != self.dim {
            return Err(Error::Dimension {
                context: "field evaluation".into(),
                expected: self.dim,
                found: p.dim(),
            });
        }
        match &self.backing {
            Backing::Expr(e) => e.eval(p.x(), p.y()),
            Backing::Callable { f, label, .. } => {
                let v = f(p)?;
                if !v.is_finite() {
                    return Err(Error::Domain {
                        subtree: label.clone(),
                        message: "non-finite result".into(),
                    });
                }
                Ok(v)
            }
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.backing {
            Backing::Expr(e) => write!(f, "ScalarField({e})"),
            Backing::Callable { label, .. } => write!(f, "ScalarField(<{label}>)"),
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.backing {
            Backing::Expr(e) => write!(f, "{e}"),
            Backing::Callable { label, .. } => write!(f, "<{label}>"),
        }
    }
}

/// A d-tensor field of valence `(r, s)`: `n^(r+s)` scalar components
/// addressed by multi-index, upper indices first, row-major.
#[derive(Debug, Clone)]
pub struct DTensorField {
    upper: usize,
    lower: usize,
    dim: usize,
    components: Vec<ScalarField>,
}

impl DTensorField {
    pub fn new(upper: usize, lower: usize, dim: usize, components: Vec<ScalarField>) -> Result<Self> {
        let expected = dim.pow((upper + lower) as u32);
        if components.len() != expected {
            return Err(Error::Dimension {
                context: format!("({upper},{lower}) d-tensor components"),
                expected,
                found: components.len(),
            });
        }
        if let Some(bad) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::Dimension {
                context: "d-tensor component field".into(),
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(DTensorField {
            upper,
            lower,
            dim,
            components,
        })
    }

    /// A one-form: valence `(0, 1)`.
    pub fn one_form(components: Vec<ScalarField>) -> Result<Self> {
        let dim = components.len();
        DTensorField::new(0, 1, dim, components)
    }

    pub fn zeros(upper: usize, lower: usize, dim: usize) -> Self {
        let len = dim.pow((upper + lower) as u32);
        let components = (0..len).map(|_| ScalarField::zero(dim)).collect();
        DTensorField {
            upper,
            lower,
            dim,
            components,
        }
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    fn flat(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.upper + self.lower, "multi-index rank");
        let mut flat = 0;
        for &k in index {
            assert!(k < self.dim, "index {k} out of range for dimension {}", self.dim);
            flat = flat * self.dim + k;
        }
        flat
    }

    pub fn component(&self, index: &[usize]) -> &ScalarField {
        &self.components[self.flat(index)]
    }

    /// Component `(j, k)` of a rank-2 field.
    pub fn entry2(&self, j: usize, k: usize) -> &ScalarField {
        self.component(&[j, k])
    }

    /// Component `i` of a rank-1 field.
    pub fn entry1(&self, i: usize) -> &ScalarField {
        self.component(&[i])
    }

    pub fn eval_all(&self, p: &PointTM) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    pub fn is_x_only(&self) -> bool {
        self.components.iter().all(|c| c.is_x_only())
    }
}

/// Derivative evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    Symbolic,
    Fd,
}

impl fmt::Display for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineMode::Symbolic => write!(f, "symbolic"),
            EngineMode::Fd => write!(f, "fd"),
        }
    }
}

/// Evaluates partial derivatives of scalar fields, either exactly through
/// the symbolic differentiator or by central finite differences with step
/// `h_i = h0 * max(1, |coordinate_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEngine {
    mode: EngineMode,
    h0: f64,
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

impl DerivativeEngine {
    pub fn symbolic() -> Self {
        DerivativeEngine {
            mode: EngineMode::Symbolic,
            h0: DEFAULT_FD_STEP,
        }
    }

    pub fn central_fd(h0: f64) -> Self {
        assert!(h0 > 0.0 && h0.is_finite(), "FD step must be positive");
        DerivativeEngine {
            mode: EngineMode::Fd,
            h0,
        }
    }

    pub fn mode(&self) -> EngineMode {
        self.mode
    }

    pub fn fd_step(&self) -> f64 {
        self.h0
    }

    /// Default residual tolerance for checks run under this engine:
    /// 1e-9 symbolic, 1e-6 finite-difference.
    pub fn residual_tolerance(&self) -> f64 {
        match self.mode {
            EngineMode::Symbolic => 1e-9,
            EngineMode::Fd => 1e-6,
        }
    }

    fn step(&self, coordinate: f64) -> f64 {
        self.h0 * coordinate.abs().max(1.0)
    }

    /// `∂f/∂x^i` at `p`.
    pub fn partial_x(&self, f: &ScalarField, i: usize, p: &PointTM) -> Result<f64> {
        self.partial(f, Var::X(i), p)
    }

    /// `∂f/∂y^i` at `p`.
    pub fn partial_y(&self, f: &ScalarField, i: usize, p: &PointTM) -> Result<f64> {
        self.partial(f, Var::Y(i), p)
    }

    pub fn partial(&self, f: &ScalarField, v: Var, p: &PointTM) -> Result<f64> {
        let i = match v {
            Var::X(i) | Var::Y(i) => i,
        };
        if i >= p.dim() || p.dim() != f.dim() {
            return Err(Error::Dimension {
                context: "partial derivative".into(),
                expected: f.dim(),
                found: i.max(p.dim()),
            });
        }
        match self.mode {
            EngineMode::Symbolic => match f.expr() {
                Some(e) => e.differentiate(v).eval(p.x(), p.y()),
                None => Err(Error::SymbolicBacking {
                    context: format!("{f}"),
                }),
            },
            EngineMode::Fd => {
                let (plus, minus, h) = match v {
                    Var::X(i) => {
                        let h = self.step(p.x()[i]);
                        (p.shift_x(i, h), p.shift_x(i, -h), h)
                    }
                    Var::Y(i) => {
                        let h = self.step(p.y()[i]);
                        (p.shift_y(i, h), p.shift_y(i, -h), h)
                    }
                };
                Ok((f.eval(&plus)? - f.eval(&minus)?) / (2.0 * h))
            }
        }
    }
}
