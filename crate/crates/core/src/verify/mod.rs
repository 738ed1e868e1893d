//! Scenarios and the executable property checks over seeded sample points.
//!
//! A [`Scenario`] bundles the geometric data `(g, N, W)` with a sampling
//! box, gauges to test, engine settings, and a seed. Every check in
//! [`checks`] is deterministic given the scenario and seed: the sampler is
//! a seeded ChaCha stream with rejection on the validity domain, so two
//! runs produce identical reports.

mod checks;

pub use checks::{
    check_closedness, check_compatibility, check_conformal_invariance, check_cr,
    check_cr_unscaled_diagnostic, check_metric, check_riemannian_reduction,
    check_vertical_failure, run_all, uniqueness_probe, BoundKind, CheckReport, RunReport,
    CLOSEDNESS_FD_TOLERANCE, CLOSEDNESS_SYMBOLIC_TOLERANCE, STRUCT_SYMMETRY_TOLERANCE,
    UNIQUENESS_KAPPA_MIN, Y_INDEPENDENCE_TOLERANCE,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connection::{canonical_nonlinear, NonlinearConnection};
use crate::error::{Error, Result};
use crate::manifold::{DerivativeEngine, EngineMode, PointTM, ScalarField};
use crate::metric::GLMetric;
use crate::metric::WeylStructure;

/// Per-coordinate sampling intervals for the base and fiber coordinates.
#[derive(Debug, Clone)]
pub struct SampleBox {
    x: Vec<(f64, f64)>,
    y: Vec<(f64, f64)>,
}

impl SampleBox {
    pub fn new(x: Vec<(f64, f64)>, y: Vec<(f64, f64)>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Scenario(format!(
                "sampling box needs matching x and y interval lists, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        for &(lo, hi) in x.iter().chain(y.iter()) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Scenario(format!(
                    "invalid sampling interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(SampleBox { x, y })
    }

    /// `[-w, w]` in every coordinate.
    pub fn symmetric(dim: usize, w: f64) -> Self {
        SampleBox {
            x: vec![(-w, w); dim],
            y: vec![(-w, w); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x_intervals(&self) -> &[(f64, f64)] {
        &self.x
    }

    pub fn y_intervals(&self) -> &[(f64, f64)] {
        &self.y
    }

    pub fn describe(&self) -> String {
        let fmt = |iv: &[(f64, f64)]| {
            iv.iter()
                .map(|(lo, hi)| format!("[{lo}, {hi}]"))
                .collect::<Vec<_>>()
                .join(" x ")
        };
        format!("x in {}; y in {}", fmt(&self.x), fmt(&self.y))
    }
}

/// Either explicit coefficients or the canonical connection derived from a
/// y-independent metric.
#[derive(Debug, Clone)]
pub enum NonlinearSpec {
    Canonical,
    Explicit(NonlinearConnection),
}

impl NonlinearSpec {
    pub fn resolve(&self, g: &GLMetric, engine: &DerivativeEngine) -> Result<NonlinearConnection> {
        match self {
            NonlinearSpec::Canonical => canonical_nonlinear(g, engine),
            NonlinearSpec::Explicit(nc) => Ok(nc.clone()),
        }
    }
}

/// A full verification scenario: geometry, gauges, sampling, and engine
/// settings.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub metric: GLMetric,
    pub nonlinear: NonlinearSpec,
    pub weyl: WeylStructure,
    pub gauges: Vec<ScalarField>,
    pub sample_box: SampleBox,
    pub engine: DerivativeEngine,
    pub points: usize,
    pub seed: u64,
    /// Overrides the engine-default residual tolerance in every check that
    /// uses one; fixed structural thresholds are unaffected.
    pub tolerance_override: Option<f64>,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        metric: GLMetric,
        nonlinear: NonlinearSpec,
        weyl: WeylStructure,
        gauges: Vec<ScalarField>,
        sample_box: SampleBox,
        engine: DerivativeEngine,
        points: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = metric.dim();
        if weyl.dim() != dim || sample_box.dim() != dim {
            return Err(Error::Scenario(format!(
                "dimension mismatch: metric {}, weyl {}, box {}",
                dim,
                weyl.dim(),
                sample_box.dim()
            )));
        }
        if let NonlinearSpec::Explicit(nc) = &nonlinear {
            if nc.dim() != dim {
                return Err(Error::Scenario(format!(
                    "nonlinear connection dimension {} does not match metric dimension {dim}",
                    nc.dim()
                )));
            }
        }
        if matches!(nonlinear, NonlinearSpec::Canonical) && !metric.is_x_only() {
            return Err(Error::Scenario(
                "canonical nonlinear connection requires a y-independent metric".into(),
            ));
        }
        for gauge in &gauges {
            if gauge.dim() != dim {
                return Err(Error::Scenario(format!(
                    "gauge `{gauge}` has dimension {} instead of {dim}",
                    gauge.dim()
                )));
            }
            if !gauge.is_x_only() {
                return Err(Error::Scenario(format!(
                    "gauge `{gauge}` must depend on x only"
                )));
            }
            if gauge.expr().is_none() {
                return Err(Error::Scenario(format!(
                    "gauge `{gauge}` must be expression-backed"
                )));
            }
        }
        if points == 0 {
            return Err(Error::Scenario("point count must be positive".into()));
        }
        Ok(Scenario {
            name: name.into(),
            metric,
            nonlinear,
            weyl,
            gauges,
            sample_box,
            engine,
            points,
            seed,
            tolerance_override: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Engine-default residual tolerance, unless overridden.
    pub fn residual_tolerance(&self) -> f64 {
        self.tolerance_override
            .unwrap_or_else(|| self.engine.residual_tolerance())
    }

    pub fn closedness_tolerance(&self) -> f64 {
        self.tolerance_override.unwrap_or(match self.engine.mode() {
            EngineMode::Symbolic => CLOSEDNESS_SYMBOLIC_TOLERANCE,
            EngineMode::Fd => CLOSEDNESS_FD_TOLERANCE,
        })
    }

    /// Human-readable sampling domain, noted in every report.
    pub fn domain_description(&self) -> String {
        let mut s = self.sample_box.describe();
        let validity = self.metric.validity();
        if !validity.exclusions().is_empty() {
            let excl = validity
                .exclusions()
                .iter()
                .map(|e| format!("|{e}| >= {}", validity.margin()))
                .collect::<Vec<_>>()
                .join(", ");
            s.push_str(&format!("; exclusions: {excl}"));
        }
        s
    }

    /// Draw `self.points` points uniformly from the box, rejecting points
    /// outside the metric's validity domain. Deterministic in the seed.
    pub fn sample_points(&self) -> Result<Vec<PointTM>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.dim();
        let mut out = Vec::with_capacity(self.points);
        let max_attempts = self.points.saturating_mul(1000).max(1000);
        let mut attempts = 0;
        while out.len() < self.points {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::Sampling(format!(
                    "could not draw {} valid points in {max_attempts} attempts; \
                     the exclusions may cover the box",
                    self.points
                )));
            }
            let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                }
            };
            let x: Vec<f64> = self.sample_box.x.iter().map(|&iv| draw(&mut rng, iv)).collect();
            let y: Vec<f64> = self.sample_box.y.iter().map(|&iv| draw(&mut rng, iv)).collect();
            debug_assert_eq!(x.len(), n);
            let p = PointTM::new(x, y);
            if self.metric.validity().contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }
}
