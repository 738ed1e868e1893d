//! Nonlinear connections, the adapted derivative `δ/δx^i`, d-connections
//! with their Christoffel pair `(F, C)`, covariant derivatives of `(0,2)`
//! d-tensors, the Chern-Rund connection, and the Weyl-compatible
//! connection built from it.
//!
//! Connection coefficients are evaluated lazily per point: the metric
//! inverse `g^{ia}` is computed numerically at each point, never as a
//! symbolic expression, while every derivative that enters a coefficient
//! goes through the caller's [`DerivativeEngine`]. A whole coefficient
//! block is produced in one call so the inverse and the delta-derivative
//! table are shared across the `n^3` entries of that point.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifold::{DTensorField, DerivativeEngine, PointTM, ScalarField};
use crate::metric::{raise_index, GLMetric, WeylStructure};

/// Flat offset of `(a, b, c)` in a rank-3 block of dimension `n`.
#[inline]
pub fn idx3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

type BlockFn = Arc<dyn Fn(&PointTM) -> Result<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
enum BlockKind {
    Fields(Arc<Vec<ScalarField>>),
    PerPoint(BlockFn),
}

/// A rank-`r` coefficient block: `n^r` values per point, backed either by
/// explicit scalar fields or by a per-point evaluator.
#[derive(Clone)]
pub struct CoeffBlock {
    dim: usize,
    rank: u32,
    kind: BlockKind,
}

impl CoeffBlock {
    pub fn from_fields(dim: usize, rank: u32, fields: Vec<ScalarField>) -> Result<Self> {
        let expected = dim.pow(rank);
        if fields.len() != expected {
            return Err(Error::Dimension {
                context: format!("rank-{rank} coefficient block"),
                expected,
                found: fields.len(),
            });
        }
        Ok(CoeffBlock {
            dim,
            rank,
            kind: BlockKind::Fields(Arc::new(fields)),
        })
    }

    pub fn from_fn(
        dim: usize,
        rank: u32,
        f: impl Fn(&PointTM) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        CoeffBlock {
            dim,
            rank,
            kind: BlockKind::PerPoint(Arc::new(f)),
        }
    }

    /// A block of literal zero fields; evaluates to exactly `0.0`.
    pub fn zeros(dim: usize, rank: u32) -> Self {
        let fields = (0..dim.pow(rank)).map(|_| ScalarField::zero(dim)).collect();
        CoeffBlock {
            dim,
            rank,
            kind: BlockKind::Fields(Arc::new(fields)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.dim.pow(self.rank)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All coefficients at `p`, row-major over the index tuple.
    pub fn at(&self, p: &PointTM) -> Result<Vec<f64>> {
        match &self.kind {
            BlockKind::Fields(fields) => fields.iter().map(|f| f.eval(p)).collect(),
            BlockKind::PerPoint(f) => {
                let values = f(p)?;
                debug_assert_eq!(values.len(), self.len());
                Ok(values)
            }
        }
    }
}

impl std::fmt::Debug for CoeffBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CoeffBlock(dim={}, rank={})", self.dim, self.rank)
    }
}

/// A nonlinear connection given by coefficients `N^j_i(x, y)`; entry
/// `(j, i)` sits at flat offset `j*n + i` (upper index first). Any finite
/// coefficient set defines a horizontal complement.
#[derive(Debug, Clone)]
pub struct NonlinearConnection {
    coeffs: CoeffBlock,
}

impl NonlinearConnection {
    pub fn zero(dim: usize) -> Self {
        NonlinearConnection {
            coeffs: CoeffBlock::zeros(dim, 2),
        }
    }

    /// `fields[j*n + i]` is `N^j_i`.
    pub fn from_fields(dim: usize, fields: Vec<ScalarField>) -> Result<Self> {
        Ok(NonlinearConnection {
            coeffs: CoeffBlock::from_fields(dim, 2, fields)?,
        })
    }

    pub fn from_block(coeffs: CoeffBlock) -> Result<Self> {
        if coeffs.rank() != 2 {
            return Err(Error::Dimension {
                context: "nonlinear connection block".into(),
                expected: 2,
                found: coeffs.rank() as usize,
            });
        }
        Ok(NonlinearConnection { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    /// The full matrix `N^j_i(p)`, row-major in `(j, i)`.
    pub fn matrix_at(&self, p: &PointTM) -> Result<Vec<f64>> {
        self.coeffs.at(p)
    }
}

/// The adapted derivative `δf/δx^i = ∂f/∂x^i - N^j_i ∂f/∂y^j` at `p`.
pub fn delta_x(
    f: &ScalarField,
    i: usize,
    p: &PointTM,
    nc: &NonlinearConnection,
    engine: &DerivativeEngine,
) -> Result<f64> {
    let n = nc.dim();
    let mut value = engine.partial_x(f, i, p)?;
    let nmat = nc.matrix_at(p)?;
    for j in 0..n {
        let nji = nmat[j * n + i];
        if nji != 0.0 {
            value -= nji * engine.partial_y(f, j, p)?;
        }
    }
    Ok(value)
}

/// A d-connection given by its Christoffel pair: horizontal coefficients
/// `F^i_jk` and vertical coefficients `C^i_jk`, each a rank-3 block with
/// the upper index first (`idx3(n, i, j, k)`).
#[derive(Debug, Clone)]
pub struct FinslerConnection {
    dim: usize,
    horizontal: CoeffBlock,
    vertical: CoeffBlock,
}

impl FinslerConnection {
    pub fn from_blocks(horizontal: CoeffBlock, vertical: CoeffBlock) -> Result<Self> {
        if horizontal.rank() != 3 || vertical.rank() != 3 || horizontal.dim() != vertical.dim() {
            return Err(Error::Dimension {
                context: "d-connection blocks".into(),
                expected: 3,
                found: horizontal.rank().max(vertical.rank()) as usize,
            });
        }
        Ok(FinslerConnection {
            dim: horizontal.dim(),
            horizontal,
            vertical,
        })
    }

    pub fn from_fields(
        dim: usize,
        horizontal: Vec<ScalarField>,
        vertical: Vec<ScalarField>,
    ) -> Result<Self> {
        FinslerConnection::from_blocks(
            CoeffBlock::from_fields(dim, 3, horizontal)?,
            CoeffBlock::from_fields(dim, 3, vertical)?,
        )
    }

    /// The flat connection: `F = C = 0`.
    pub fn zero(dim: usize) -> Self {
        FinslerConnection {
            dim,
            horizontal: CoeffBlock::zeros(dim, 3),
            vertical: CoeffBlock::zeros(dim, 3),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All `F^i_jk(p)`, addressed by [`idx3`]`(n, i, j, k)`.
    pub fn horizontal_at(&self, p: &PointTM) -> Result<Vec<f64>> {
        self.horizontal.at(p)
    }

    /// All `C^i_jk(p)`, addressed by [`idx3`]`(n, i, j, k)`.
    pub fn vertical_at(&self, p: &PointTM) -> Result<Vec<f64>> {
        self.vertical.at(p)
    }

    /// `max |F^i_jk - F^i_kj|` at `p`.
    pub fn horizontal_asymmetry_at(&self, p: &PointTM) -> Result<f64> {
        let f = self.horizontal_at(p)?;
        Ok(max_pair_asymmetry(self.dim, &f))
    }

    /// `max |C^i_jk - C^i_kj|` at `p`.
    pub fn vertical_asymmetry_at(&self, p: &PointTM) -> Result<f64> {
        let c = self.vertical_at(p)?;
        Ok(max_pair_asymmetry(self.dim, &c))
    }

    /// `max |C^i_jk|` at `p`; zero exactly for horizontal connections.
    pub fn vertical_max_at(&self, p: &PointTM) -> Result<f64> {
        Ok(self
            .vertical_at(p)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// A copy with `F^i_jk` shifted by `eps` in the slot `(i, j, k)`; the
    /// mirror slot `(i, k, j)` is shifted too when `j != k`, so an
    /// h-symmetric connection stays h-symmetric.
    pub fn with_horizontal_perturbation(
        &self,
        i: usize,
        j: usize,
        k: usize,
        eps: f64,
    ) -> FinslerConnection {
        let dim = self.dim;
        let base = self.horizontal.clone();
        let horizontal = CoeffBlock::from_fn(dim, 3, move |p| {
            let mut f = base.at(p)?;
            f[idx3(dim, i, j, k)] += eps;
            if j != k {
                f[idx3(dim, i, k, j)] += eps;
            }
            Ok(f)
        });
        FinslerConnection {
            dim,
            horizontal,
            vertical: self.vertical.clone(),
        }
    }
}

fn max_pair_asymmetry(n: usize, block: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in (j + 1)..n {
                worst = worst.max((block[idx3(n, i, j, k)] - block[idx3(n, i, k, j)]).abs());
            }
        }
    }
    worst
}

/// The horizontal covariant derivative of a `(0,2)` d-tensor:
/// `t_{jk|i} = δt_jk/δx^i - t_ak F^a_ji - t_ja F^a_ki`, returned with
/// `t_{jk|i}` at [`idx3`]`(n, j, k, i)`.
pub fn h_cov_deriv_02(
    t: &DTensorField,
    fc: &FinslerConnection,
    nc: &NonlinearConnection,
    p: &PointTM,
    engine: &DerivativeEngine,
) -> Result<Vec<f64>> {
    require_02(t, fc.dim())?;
    let n = fc.dim();
    let f = fc.horizontal_at(p)?;
    let tv = t.eval_all(p)?;
    let mut out = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                let mut v = delta_x(t.entry2(j, k), i, p, nc, engine)?;
                for a in 0..n {
                    v -= tv[a * n + k] * f[idx3(n, a, j, i)];
                    v -= tv[j * n + a] * f[idx3(n, a, k, i)];
                }
                out[idx3(n, j, k, i)] = v;
            }
        }
    }
    Ok(out)
}

/// The vertical covariant derivative of a `(0,2)` d-tensor:
/// `t_jk|_i = ∂t_jk/∂y^i - t_ak C^a_ji - t_ja C^a_ki`, returned with
/// `t_jk|_i` at [`idx3`]`(n, j, k, i)`.
pub fn v_cov_deriv_02(
    t: &DTensorField,
    fc: &FinslerConnection,
    p: &PointTM,
    engine: &DerivativeEngine,
) -> Result<Vec<f64>> {
    require_02(t, fc.dim())?;
    let n = fc.dim();
    let c = fc.vertical_at(p)?;
    let tv = t.eval_all(p)?;
    let mut out = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                let mut v = engine.partial_y(t.entry2(j, k), i, p)?;
                for a in 0..n {
                    v -= tv[a * n + k] * c[idx3(n, a, j, i)];
                    v -= tv[j * n + a] * c[idx3(n, a, k, i)];
                }
                out[idx3(n, j, k, i)] = v;
            }
        }
    }
    Ok(out)
}

fn require_02(t: &DTensorField, dim: usize) -> Result<()> {
    if t.valence() != (0, 2) || t.dim() != dim {
        return Err(Error::Dimension {
            context: "(0,2) covariant derivative".into(),
            expected: dim,
            found: t.dim(),
        });
    }
    Ok(())
}

/// Shared evaluator for Christoffel-type blocks
/// `factor * g^{ia} (D g_ak / D^j + D g_ja / D^k - D g_jk / D^a)` where the
/// derivative `D` is supplied per point as a table `dg[(a,b,c)] = D g_ab
/// along c`.
fn christoffel_from_table(n: usize, inv: &nalgebra::DMatrix<f64>, dg: &[f64], factor: f64) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut sum = 0.0;
                for a in 0..n {
                    sum += inv[(i, a)]
                        * (dg[idx3(n, a, k, j)] + dg[idx3(n, j, a, k)] - dg[idx3(n, j, k, a)]);
                }
                out[idx3(n, i, j, k)] = factor * sum;
            }
        }
    }
    out
}

fn cr_horizontal_block(
    g: GLMetric,
    nc: NonlinearConnection,
    engine: DerivativeEngine,
    factor: f64,
) -> CoeffBlock {
    let n = g.dim();
    CoeffBlock::from_fn(n, 3, move |p| {
        let inv = g.inverse_at(p)?;
        let mut dg = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    dg[idx3(n, a, b, c)] = delta_x(g.entry(a, b), c, p, &nc, &engine)?;
                }
            }
        }
        Ok(christoffel_from_table(n, &inv, &dg, factor))
    })
}

/// The Chern-Rund connection of `(g, N)`: horizontal coefficients
/// `F^i_jk = (1/2) g^{ia} (δg_ak/δx^j + δg_ja/δx^k - δg_jk/δx^a)` and
/// `C = 0`. It is horizontal-metrical and total symmetric; both facts are
/// enforced by tests rather than assumed.
pub fn chern_rund(
    g: &GLMetric,
    nc: &NonlinearConnection,
    engine: &DerivativeEngine,
) -> FinslerConnection {
    FinslerConnection {
        dim: g.dim(),
        horizontal: cr_horizontal_block(g.clone(), nc.clone(), *engine, 0.5),
        vertical: CoeffBlock::zeros(g.dim(), 3),
    }
}

/// Diagnostic variant of [`chern_rund`] without the `1/2` prefactor.
/// Horizontal metricity fails for any non-constant metric; kept to
/// demonstrate by how much.
pub fn chern_rund_unscaled(
    g: &GLMetric,
    nc: &NonlinearConnection,
    engine: &DerivativeEngine,
) -> FinslerConnection {
    FinslerConnection {
        dim: g.dim(),
        horizontal: cr_horizontal_block(g.clone(), nc.clone(), *engine, 1.0),
        vertical: CoeffBlock::zeros(g.dim(), 3),
    }
}

/// The unique horizontal, h-symmetric d-connection compatible with the
/// Weyl data `(g, w)`:
/// `F^i_jk = CR^i_jk - (1/2)(δ^i_j w_k + δ^i_k w_j - g_jk w^i)`, `C = 0`,
/// with `w^i = g^{ia} w_a`. Satisfies `g_{jk|i} = w_i g_jk`.
pub fn weyl_connection(
    g: &GLMetric,
    nc: &NonlinearConnection,
    w: &DTensorField,
    engine: &DerivativeEngine,
) -> Result<FinslerConnection> {
    require_one_form(w, g.dim())?;
    let n = g.dim();
    let cr = cr_horizontal_block(g.clone(), nc.clone(), *engine, 0.5);
    let g_owned = g.clone();
    let w_owned = w.clone();
    let horizontal = CoeffBlock::from_fn(n, 3, move |p| {
        let mut f = cr.at(p)?;
        let wv = w_owned.eval_all(p)?;
        let wup = raise_index(&w_owned, &g_owned, p)?;
        let gm = g_owned.matrix_at(p)?;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut corr = 0.0;
                    if i == j {
                        corr += wv[k];
                    }
                    if i == k {
                        corr += wv[j];
                    }
                    corr -= gm[(j, k)] * wup[i];
                    f[idx3(n, i, j, k)] -= 0.5 * corr;
                }
            }
        }
        Ok(f)
    });
    Ok(FinslerConnection {
        dim: n,
        horizontal,
        vertical: CoeffBlock::zeros(n, 3),
    })
}

/// Vertical Cartan-type coefficients
/// `C^i_jk = (1/2) g^{ia} (∂g_ak/∂y^j + ∂g_ja/∂y^k - ∂g_jk/∂y^a)`; the
/// vertical analogue of the Chern-Rund display, vertical-metrical by the
/// same index algebra. Zero for x-only metrics.
pub fn vertical_cartan(g: &GLMetric, engine: &DerivativeEngine) -> CoeffBlock {
    let g = g.clone();
    let engine = *engine;
    let n = g.dim();
    CoeffBlock::from_fn(n, 3, move |p| {
        let inv = g.inverse_at(p)?;
        let mut dg = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    dg[idx3(n, a, b, c)] = engine.partial_y(g.entry(a, b), c, p)?;
                }
            }
        }
        Ok(christoffel_from_table(n, &inv, &dg, 0.5))
    })
}

/// Vertical coefficients corrected so that `g_jk|_i = w_i g_jk`: the same
/// `1/2`-weighted correction as the horizontal case, with `∂/∂y` in place
/// of `δ/δx`.
fn vertical_weyl_block(g: &GLMetric, w: &DTensorField, engine: &DerivativeEngine) -> CoeffBlock {
    let n = g.dim();
    let vc = vertical_cartan(g, engine);
    let g = g.clone();
    let w = w.clone();
    CoeffBlock::from_fn(n, 3, move |p| {
        let mut c = vc.at(p)?;
        let wv = w.eval_all(p)?;
        let wup = raise_index(&w, &g, p)?;
        let gm = g.matrix_at(p)?;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut corr = 0.0;
                    if i == j {
                        corr += wv[k];
                    }
                    if i == k {
                        corr += wv[j];
                    }
                    corr -= gm[(j, k)] * wup[i];
                    c[idx3(n, i, j, k)] -= 0.5 * corr;
                }
            }
        }
        Ok(c)
    })
}

/// The defect of vertical compatibility across a conformal change.
///
/// A connection vertical-compatible with `(g, w)` is built, then measured
/// against the rescaled data `ḡ = e^{2f} g`, `w̄ = w + 2 df`:
/// `D_jki = ḡ_jk|_i - w̄_i ḡ_jk`, returned at [`idx3`]`(n, j, k, i)`.
/// Because vertical derivatives kill `e^{2f(x)}`, the defect equals
/// `-2 (∂f/∂x^i) ḡ_jk` exactly, nonzero whenever `df != 0`.
pub fn vertical_weyl_defect(
    g: &GLMetric,
    gauge: &ScalarField,
    w: &DTensorField,
    p: &PointTM,
    engine: &DerivativeEngine,
) -> Result<Vec<f64>> {
    require_one_form(w, g.dim())?;
    let n = g.dim();
    let fc = FinslerConnection::from_blocks(
        CoeffBlock::zeros(n, 3),
        vertical_weyl_block(g, w, engine),
    )?;
    let gbar = g.conformal_scale(gauge)?;
    let wbar = WeylStructure::new(w.clone())?.form_for_gauge(gauge)?;
    let vcov = v_cov_deriv_02(gbar.tensor(), &fc, p, engine)?;
    let wbar_vals = wbar.eval_all(p)?;
    let gbar_m = gbar.matrix_at(p)?;
    let mut out = vec![0.0; n * n * n];
    for j in 0..n {
        for k in 0..n {
            for i in 0..n {
                out[idx3(n, j, k, i)] = vcov[idx3(n, j, k, i)] - wbar_vals[i] * gbar_m[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Classical Christoffel symbols `Γ^i_jk` of a y-independent metric at
/// `p`, addressed by [`idx3`]`(n, i, j, k)`.
pub fn levi_civita(g: &GLMetric, p: &PointTM, engine: &DerivativeEngine) -> Result<Vec<f64>> {
    if !g.is_x_only() {
        return Err(Error::NotXOnly {
            context: "Levi-Civita connection".into(),
        });
    }
    let n = g.dim();
    let inv = g.inverse_at(p)?;
    let mut dg = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                dg[idx3(n, a, b, c)] = engine.partial_x(g.entry(a, b), c, p)?;
            }
        }
    }
    Ok(christoffel_from_table(n, &inv, &dg, 0.5))
}

/// The canonical nonlinear connection `N^i_j = Γ^i_jk(x) y^k` of a
/// y-independent metric; linear in `y` and zero for flat metrics.
pub fn canonical_nonlinear(g: &GLMetric, engine: &DerivativeEngine) -> Result<NonlinearConnection> {
    if !g.is_x_only() {
        return Err(Error::NotXOnly {
            context: "canonical nonlinear connection".into(),
        });
    }
    let n = g.dim();
    let g = g.clone();
    let engine = *engine;
    NonlinearConnection::from_block(CoeffBlock::from_fn(n, 2, move |p| {
        let gamma = levi_civita(&g, p, &engine)?;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n)
                    .map(|k| gamma[idx3(n, i, j, k)] * p.y()[k])
                    .sum();
            }
        }
        Ok(out)
    }))
}

fn require_one_form(w: &DTensorField, dim: usize) -> Result<()> {
    if w.valence() != (0, 1) || w.dim() != dim {
        return Err(Error::Dimension {
            context: "one-form argument".into(),
            expected: dim,
            found: w.dim(),
        });
    }
    if !w.is_x_only() {
        return Err(Error::NotXOnly {
            context: "Weyl one-form".into(),
        });
    }
    Ok(())
}
