//! Generalized Lagrange metrics, conformal classes, and Weyl structures.
//!
//! A metric is a symmetric, non-degenerate `(0,2)` d-tensor field with
//! constant signature on its validity domain. Symmetry and signature are
//! checked numerically at sample points — never structurally — because
//! expression equality is only ever decided by evaluation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::manifold::{DTensorField, DerivativeEngine, PointTM, ScalarField};

/// Determinants at or below this magnitude count as degenerate, and
/// eigenvalues at or below it carry no sign for the signature count.
pub const DET_THRESHOLD: f64 = 1e-12;

/// Numeric tolerance on `max |g_jk - g_kj|` in [`GLMetric::validate`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Eigenvalue sign counts `(plus, minus)` of the metric's quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
}

impl Signature {
    pub fn riemannian(dim: usize) -> Self {
        Signature { plus: dim, minus: 0 }
    }
}

/// Validity domain given by exclusion fields: a point is valid when every
/// exclusion expression stays at least `margin` away from zero.
#[derive(Debug, Clone)]
pub struct Validity {
    exclusions: Vec<ScalarField>,
    margin: f64,
}

pub const DEFAULT_EXCLUSION_MARGIN: f64 = 0.05;

impl Validity {
    /// No exclusions: the whole chart is valid.
    pub fn everywhere() -> Self {
        Validity {
            exclusions: Vec::new(),
            margin: DEFAULT_EXCLUSION_MARGIN,
        }
    }

    pub fn new(exclusions: Vec<ScalarField>, margin: f64) -> Self {
        assert!(margin >= 0.0 && margin.is_finite());
        Validity { exclusions, margin }
    }

    pub fn exclusions(&self) -> &[ScalarField] {
        &self.exclusions
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Points where an exclusion fails to evaluate count as invalid.
    pub fn contains(&self, p: &PointTM) -> bool {
        self.exclusions.iter().all(|e| match e.eval(p) {
            Ok(v) => v.abs() >= self.margin,
            Err(_) => false,
        })
    }
}

/// Per-point diagnostics from [`GLMetric::validate`].
#[derive(Debug, Clone)]
pub struct PointDiagnostics {
    pub point: PointTM,
    pub det: f64,
    pub plus: usize,
    pub minus: usize,
    pub symmetry_defect: f64,
}

/// Outcome of validating the three metric clauses (symmetry,
/// non-degeneracy, constant signature) over a sample set.
#[derive(Debug, Clone)]
pub struct SignatureReport {
    pub expected: Signature,
    pub pass: bool,
    pub worst_symmetry_defect: f64,
    pub min_abs_det: f64,
    pub per_point: Vec<PointDiagnostics>,
    pub failures: Vec<String>,
}

/// A generalized Lagrange metric: `(0,2)` d-tensor components, a declared
/// signature, and the validity domain on which the clauses must hold.
#[derive(Debug, Clone)]
pub struct GLMetric {
    tensor: DTensorField,
    signature: Signature,
    validity: Validity,
}

impl GLMetric {
    pub fn new(tensor: DTensorField, signature: Signature, validity: Validity) -> Result<Self> {
        if tensor.valence() != (0, 2) {
            return Err(Error::Dimension {
                context: "metric valence".into(),
                expected: 2,
                found: tensor.valence().0 + tensor.valence().1,
            });
        }
        if signature.plus + signature.minus != tensor.dim() {
            return Err(Error::Scenario(format!(
                "signature ({}, {}) does not fill dimension {}",
                signature.plus,
                signature.minus,
                tensor.dim()
            )));
        }
        Ok(GLMetric {
            tensor,
            signature,
            validity,
        })
    }

    /// A diagonal metric from the given diagonal fields; off-diagonal
    /// entries are zero.
    pub fn diagonal(diagonal: Vec<ScalarField>, signature: Signature, validity: Validity) -> Result<Self> {
        let dim = diagonal.len();
        let mut components = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for k in 0..dim {
                if j == k {
                    components.push(diagonal[j].clone());
                } else {
                    components.push(ScalarField::zero(dim));
                }
            }
        }
        GLMetric::new(DTensorField::new(0, 2, dim, components)?, signature, validity)
    }

    /// The Euclidean metric `δ_jk`.
    pub fn euclidean(dim: usize) -> Self {
        let one = ScalarField::from_expr(Expr::constant(1.0, dim));
        let diagonal = vec![one; dim];
        GLMetric::diagonal(diagonal, Signature::riemannian(dim), Validity::everywhere())
            .expect("well-formed by construction")
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn tensor(&self) -> &DTensorField {
        &self.tensor
    }

    pub fn entry(&self, j: usize, k: usize) -> &ScalarField {
        self.tensor.entry2(j, k)
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn validity(&self) -> &Validity {
        &self.validity
    }

    /// True when no component depends on a fiber coordinate.
    pub fn is_x_only(&self) -> bool {
        self.tensor.is_x_only()
    }

    /// The component matrix `g_jk(p)`.
    pub fn matrix_at(&self, p: &PointTM) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let values = self.tensor.eval_all(p)?;
        Ok(DMatrix::from_row_slice(n, n, &values))
    }

    pub fn det_at(&self, p: &PointTM) -> Result<f64> {
        Ok(self.matrix_at(p)?.determinant())
    }

    /// The inverse matrix `g^jk(p)`; errors when `|det|` is not above
    /// [`DET_THRESHOLD`].
    pub fn inverse_at(&self, p: &PointTM) -> Result<DMatrix<f64>> {
        let m = self.matrix_at(p)?;
        let det = m.determinant();
        if det.abs() <= DET_THRESHOLD {
            return Err(Error::SingularMetric {
                det,
                threshold: DET_THRESHOLD,
            });
        }
        m.try_inverse().ok_or(Error::SingularMetric {
            det,
            threshold: DET_THRESHOLD,
        })
    }

    /// Validate the three metric clauses over `points`.
    pub fn validate(&self, points: &[PointTM]) -> Result<SignatureReport> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut per_point = Vec::with_capacity(points.len());
        let mut failures = Vec::new();
        let mut worst_sym: f64 = 0.0;
        let mut min_abs_det = f64::INFINITY;
        for p in points {
            let m = self.matrix_at(p)?;
            let mut defect: f64 = 0.0;
            for j in 0..self.dim() {
                for k in (j + 1)..self.dim() {
                    defect = defect.max((m[(j, k)] - m[(k, j)]).abs());
                }
            }
            worst_sym = worst_sym.max(defect);
            let det = m.determinant();
            min_abs_det = min_abs_det.min(det.abs());
            // Symmetrize before the eigenvalue count so a tiny defect
            // cannot push the solver off the symmetric path.
            let sym = (&m + m.transpose()) * 0.5;
            let eigen = sym.symmetric_eigen();
            let mut plus = 0;
            let mut minus = 0;
            for ev in eigen.eigenvalues.iter() {
                if *ev > DET_THRESHOLD {
                    plus += 1;
                } else if *ev < -DET_THRESHOLD {
                    minus += 1;
                }
            }
            if defect > SYMMETRY_TOLERANCE {
                failures.push(format!("symmetry defect {defect:e} at {p}"));
            }
            if det.abs() <= DET_THRESHOLD {
                failures.push(format!("degenerate: |det| = {:e} at {p}", det.abs()));
            }
            if plus != self.signature.plus || minus != self.signature.minus {
                failures.push(format!(
                    "signature ({plus}, {minus}) differs from declared ({}, {}) at {p}",
                    self.signature.plus, self.signature.minus
                ));
            }
            per_point.push(PointDiagnostics {
                point: p.clone(),
                det,
                plus,
                minus,
                symmetry_defect: defect,
            });
        }
        Ok(SignatureReport {
            expected: self.signature,
            pass: failures.is_empty(),
            worst_symmetry_defect: worst_sym,
            min_abs_det,
            per_point,
            failures,
        })
    }

    /// The conformally scaled metric `e^{2f} g` for an x-only gauge `f`.
    /// Keeps the signature certificate and the validity domain.
    pub fn conformal_scale(&self, gauge: &ScalarField) -> Result<GLMetric> {
        if !gauge.is_x_only() {
            return Err(Error::NotXOnly {
                context: "conformal gauge".into(),
            });
        }
        let dim = self.dim();
        if gauge.dim() != dim {
            return Err(Error::Dimension {
                context: "conformal gauge".into(),
                expected: dim,
                found: gauge.dim(),
            });
        }
        let scale_expr = gauge
            .expr()
            .map(|f| Expr::constant(2.0, dim).mul(f).exp());
        let mut components = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for k in 0..dim {
                let entry = self.entry(j, k);
                let component = match (&scale_expr, entry.expr()) {
                    (Some(scale), Some(e)) => ScalarField::from_expr(scale.mul(e)),
                    _ => {
                        let gauge = gauge.clone();
                        let entry = entry.clone();
                        ScalarField::from_fn(
                            dim,
                            gauge.is_x_only() && entry.is_x_only(),
                            format!("exp(2*{gauge})*{entry}"),
                            move |p| Ok((2.0 * gauge.eval(p)?).exp() * entry.eval(p)?),
                        )
                    }
                };
                components.push(component);
            }
        }
        GLMetric::new(
            DTensorField::new(0, 2, dim, components)?,
            self.signature,
            self.validity.clone(),
        )
    }
}

/// An equivalence class of conformally related metrics, stored through a
/// single anchor representative.
#[derive(Debug, Clone)]
pub struct ConformalClass {
    anchor: GLMetric,
}

impl ConformalClass {
    pub fn new(anchor: GLMetric) -> Self {
        ConformalClass { anchor }
    }

    pub fn anchor(&self) -> &GLMetric {
        &self.anchor
    }

    /// The representative `e^{2f} g0` addressed by the gauge `f`.
    pub fn representative(&self, gauge: &ScalarField) -> Result<GLMetric> {
        self.anchor.conformal_scale(gauge)
    }
}

/// A Weyl structure stored by its anchor one-form `w0`; the form assigned
/// to the representative of gauge `f` is derived as `w0 + 2 df`, so the
/// transformation rule holds by construction.
#[derive(Debug, Clone)]
pub struct WeylStructure {
    anchor_form: DTensorField,
}

impl WeylStructure {
    pub fn new(anchor_form: DTensorField) -> Result<Self> {
        if anchor_form.valence() != (0, 1) {
            return Err(Error::Dimension {
                context: "Weyl form valence".into(),
                expected: 1,
                found: anchor_form.valence().0 + anchor_form.valence().1,
            });
        }
        if !anchor_form.is_x_only() {
            return Err(Error::NotXOnly {
                context: "Weyl form components".into(),
            });
        }
        Ok(WeylStructure { anchor_form })
    }

    pub fn zero(dim: usize) -> Self {
        WeylStructure {
            anchor_form: DTensorField::zeros(0, 1, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor_form.dim()
    }

    pub fn anchor(&self) -> &DTensorField {
        &self.anchor_form
    }

    /// The one-form `w0 + 2 df` for the representative of gauge `f`.
    ///
    /// The gauge must be expression-backed: the transformation derivative
    /// `df` is built symbolically and is part of the structure, independent
    /// of which engine later evaluates the result.
    pub fn form_for_gauge(&self, gauge: &ScalarField) -> Result<DTensorField> {
        if !gauge.is_x_only() {
            return Err(Error::NotXOnly {
                context: "Weyl gauge".into(),
            });
        }
        let dim = self.dim();
        if gauge.dim() != dim {
            return Err(Error::Dimension {
                context: "Weyl gauge".into(),
                expected: dim,
                found: gauge.dim(),
            });
        }
        let gauge_expr = gauge.expr().ok_or_else(|| Error::SymbolicBacking {
            context: "Weyl gauge derivative".into(),
        })?;
        let mut components = Vec::with_capacity(dim);
        for i in 0..dim {
            let df = gauge_expr.differentiate(crate::expr::Var::X(i));
            let two_df = Expr::constant(2.0, dim).mul(&df);
            let component = match self.anchor_form.entry1(i).expr() {
                Some(w) => ScalarField::from_expr(w.add(&two_df)),
                None => {
                    let w = self.anchor_form.entry1(i).clone();
                    ScalarField::from_fn(dim, true, format!("{w} + {two_df}"), move |p| {
                        Ok(w.eval(p)? + two_df.eval(p.x(), p.y())?)
                    })
                }
            };
            components.push(component);
        }
        DTensorField::new(0, 1, dim, components)
    }
}

/// Raise the one-form `w` with `g`: `w^i = g^{ia}(p) w_a(p)`.
pub fn raise_index(w: &DTensorField, g: &GLMetric, p: &PointTM) -> Result<Vec<f64>> {
    if w.valence() != (0, 1) || w.dim() != g.dim() {
        return Err(Error::Dimension {
            context: "raise_index".into(),
            expected: g.dim(),
            found: w.dim(),
        });
    }
    let inv = g.inverse_at(p)?;
    let values = w.eval_all(p)?;
    let n = g.dim();
    Ok((0..n)
        .map(|i| (0..n).map(|a| inv[(i, a)] * values[a]).sum())
        .collect())
}

/// Lower the vector `v` with `g`: `v_i = g_ia(p) v^a`.
pub fn lower_index(v: &[f64], g: &GLMetric, p: &PointTM) -> Result<Vec<f64>> {
    let n = g.dim();
    if v.len() != n {
        return Err(Error::Dimension {
            context: "lower_index".into(),
            expected: n,
            found: v.len(),
        });
    }
    let m = g.matrix_at(p)?;
    Ok((0..n)
        .map(|i| (0..n).map(|a| m[(i, a)] * v[a]).sum())
        .collect())
}

/// The exterior derivative `(dw)_ij = ∂_i w_j - ∂_j w_i` of a one-form at
/// `p`, as an `n x n` row-major matrix.
pub fn exterior_derivative_at(
    w: &DTensorField,
    p: &PointTM,
    engine: &DerivativeEngine,
) -> Result<Vec<f64>> {
    if w.valence() != (0, 1) {
        return Err(Error::Dimension {
            context: "exterior derivative".into(),
            expected: 1,
            found: w.valence().0 + w.valence().1,
        });
    }
    let n = w.dim();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = engine.partial_x(w.entry1(j), i, p)?;
            let dji = engine.partial_x(w.entry1(i), j, p)?;
            out[i * n + j] = dij - dji;
        }
    }
    Ok(out)
}
