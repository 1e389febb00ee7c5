//! Transition densities `p_t(x, y)` of the model spaces.
//!
//! The semigroup convention is `exp(t Delta)`: the Euclidean kernel is
//! `(4 pi t)^{-n/2} exp(-|x - y|^2 / 4t)`, so one coordinate of Brownian
//! motion has variance `2t` at time `t`.
//!
//! Argument order follows the Wiener-measure convention `p_t(dest, source)`;
//! every kernel except the compactified one is symmetric.

mod checks;
mod series;

use std::f64::consts::PI;

pub use checks::{
    chapman_kolmogorov_residual, delta_family_check, moment_check, DeltaFamilyPoint, MomentCheckConfig, MomentMode,
    MomentReport,
};
pub use series::theta_term_count;
pub(crate) use series::{gaussian_1d, theta_terms};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point};
use crate::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Upper bound on the omitted tail of a lattice or eigen-series.
    pub tail_tolerance: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tail_tolerance: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tail_tolerance: f64, max_terms: usize) -> Result<Self> {
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(Error::param("tail_tolerance", format!("must lie in (0, 1), got {tail_tolerance}")));
        }
        if max_terms == 0 {
            return Err(Error::param("max_terms", "must be positive"));
        }
        Ok(TruncationPolicy {
            tail_tolerance,
            max_terms,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Heat,
    /// `t / (pi (t^2 + (x - y)^2))` on the real line.
    Cauchy,
}

/// A substochastic transition density on a model space.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    model: ManifoldModel,
    kind: KernelKind,
    truncation: TruncationPolicy,
    quadrature: Quadrature,
}

impl TransitionKernel {
    pub fn heat(model: ManifoldModel) -> Result<Self> {
        model.validate()?;
        Ok(TransitionKernel {
            model,
            kind: KernelKind::Heat,
            truncation: TruncationPolicy::default(),
            quadrature: Quadrature::default(),
        })
    }

    pub fn cauchy() -> Self {
        TransitionKernel {
            model: ManifoldModel::Euclidean { dim: 1 },
            kind: KernelKind::Cauchy,
            truncation: TruncationPolicy::default(),
            quadrature: Quadrature::default(),
        }
    }

    pub fn new(model: ManifoldModel, kind: KernelKind) -> Result<Self> {
        match kind {
            KernelKind::Heat => Self::heat(model),
            KernelKind::Cauchy if model == (ManifoldModel::Euclidean { dim: 1 }) => Ok(Self::cauchy()),
            KernelKind::Cauchy => Err(Error::UnsupportedModel(format!(
                "the Cauchy kernel lives on euclidean:1, not {model}"
            ))),
        }
    }

    pub fn with_truncation(mut self, truncation: TruncationPolicy) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn truncation(&self) -> &TruncationPolicy {
        &self.truncation
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    /// Kernel on the base of a compactified model (identity otherwise).
    pub fn base_kernel(&self) -> TransitionKernel {
        TransitionKernel {
            model: self.model.base().clone(),
            ..self.clone()
        }
    }

    /// `p_t(x, y)` for interior points.
    pub fn eval(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        check_time(t)?;
        if x.is_cemetery() || y.is_cemetery() {
            return Err(Error::Domain("cemetery arguments require eval_compactified".into()));
        }
        self.model.validate_point(x)?;
        self.model.validate_point(y)?;
        self.density(t, x.coords(), y.coords())
    }

    /// Density on raw interior coordinates, without validation.
    pub(crate) fn density(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if self.kind == KernelKind::Cauchy {
            let d = x[0] - y[0];
            return Ok(t / (PI * (t * t + d * d)));
        }
        match self.model.base() {
            ManifoldModel::Euclidean { dim } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((4.0 * PI * t).powf(-0.5 * *dim as f64) * (-r2 / (4.0 * t)).exp())
            }
            ManifoldModel::Hyperbolic3 => Ok(hyperbolic_density(t, crate::manifold::hyperbolic_distance(x, y))),
            ManifoldModel::FlatTorus { periods } => {
                let mut p = 1.0;
                for ((a, b), l) in x.iter().zip(y).zip(periods) {
                    p *= series::theta_sum(separation(*a, *b, *l), *l, t, &self.truncation)?;
                }
                Ok(p)
            }
            ManifoldModel::Circle { circumference } => {
                series::theta_sum(separation(x[0], y[0], *circumference), *circumference, t, &self.truncation)
            }
            ManifoldModel::DirichletInterval { length } => dirichlet_density(x[0], y[0], *length, t, &self.truncation),
            ManifoldModel::Compactified(_) => unreachable!("base() strips compactification"),
        }
    }

    /// Mass `int p_t(x, y) dmu(y)` of the kernel started at `x`.
    /// Exactly 1 for stochastically complete models and the Cauchy kernel;
    /// below 1 on the Dirichlet interval; 1 again once the cemetery mass is
    /// counted on a compactified model.
    pub fn total_mass(&self, t: f64, x: &Point) -> Result<f64> {
        check_time(t)?;
        self.model.validate_point(x)?;
        if self.kind == KernelKind::Cauchy {
            return Ok(1.0);
        }
        match &self.model {
            ManifoldModel::DirichletInterval { length } => self.dirichlet_mass(t, x.coords()[0], *length),
            ManifoldModel::Compactified(_) => {
                let interior = if x.is_cemetery() {
                    0.0
                } else {
                    self.base_kernel().total_mass(t, x)?
                };
                let to_cemetery = self.eval_compactified(t, &Point::cemetery(), x)?;
                Ok(interior + to_cemetery)
            }
            _ => Ok(1.0),
        }
    }

    fn dirichlet_mass(&self, t: f64, x: f64, length: f64) -> Result<f64> {
        let policy = self.truncation;
        // the error slot carries truncation failures out of the integrand
        let mut failure = None;
        let mass = self.quadrature.integrate(
            |y| match dirichlet_density(x, y, length, t, &policy) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            length,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(mass.clamp(0.0, 1.0)),
        }
    }

    /// Kernel of the one-point compactification, `x` the destination and
    /// `y` the source:
    ///
    /// | x \ y     | interior            | cemetery |
    /// |-----------|---------------------|----------|
    /// | interior  | `p_t(x, y)`         | 0        |
    /// | cemetery  | `1 - mass_t(y)`     | 1        |
    pub fn eval_compactified(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        check_time(t)?;
        if !self.model.is_compactified() {
            return Err(Error::UnsupportedModel(format!("{} is not compactified", self.model)));
        }
        self.model.validate_point(x)?;
        self.model.validate_point(y)?;
        match (x.is_cemetery(), y.is_cemetery()) {
            (false, false) => self.density(t, x.coords(), y.coords()),
            (true, false) => Ok(1.0 - self.base_kernel().total_mass(t, y)?),
            (false, true) => Ok(0.0),
            (true, true) => Ok(1.0),
        }
    }

    /// Evaluates whichever of `eval` / `eval_compactified` applies.
    pub fn eval_any(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        if self.model.is_compactified() {
            self.eval_compactified(t, x, y)
        } else {
            self.eval(t, x, y)
        }
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param("t", format!("must be positive and finite, got {t}")))
    }
}

#[inline]
fn separation(a: f64, b: f64, l: f64) -> f64 {
    let d = (a - b).abs() % l;
    d.min(l - d)
}

/// Switch between image sum (short times) and sine series (long times).
pub(crate) fn dirichlet_switch_time(length: f64) -> f64 {
    length * length / (PI * PI)
}

pub(crate) fn dirichlet_density(x: f64, y: f64, length: f64, t: f64, policy: &TruncationPolicy) -> Result<f64> {
    if !(x > 0.0 && x < length && y > 0.0 && y < length) {
        return Ok(0.0);
    }
    if t < dirichlet_switch_time(length) {
        series::dirichlet_images(x, y, length, t, policy)
    } else {
        series::dirichlet_eigen(x, y, length, t, policy)
    }
}

/// `ln(rho / sinh rho)`, with the series near 0 and the log form for
/// large `rho`.
pub(crate) fn ln_rho_over_sinh(rho: f64) -> f64 {
    if rho < 1e-4 {
        let r2 = rho * rho;
        (1.0 - r2 / 6.0 + 7.0 * r2 * r2 / 360.0).ln()
    } else if rho < 20.0 {
        (rho / rho.sinh()).ln()
    } else {
        // ln sinh rho = rho - ln 2 + ln(1 - e^{-2 rho})
        rho.ln() - rho + std::f64::consts::LN_2 - (-(-2.0 * rho).exp()).ln_1p()
    }
}

/// `e^{-t} (4 pi t)^{-3/2} (rho / sinh rho) exp(-rho^2 / 4t)`.
pub(crate) fn hyperbolic_density(t: f64, rho: f64) -> f64 {
    (-t - 1.5 * (4.0 * PI * t).ln() + ln_rho_over_sinh(rho) - rho * rho / (4.0 * t)).exp()
}
