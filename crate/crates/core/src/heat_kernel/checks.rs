//! Numerical checks of the transition-function axioms.

use std::cell::RefCell;
use std::f64::consts::PI;

use libm::tgamma as gamma;

use super::{check_time, dirichlet_density, hyperbolic_density, series, KernelKind, TransitionKernel};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point};
use crate::quadrature::{maximize, Quadrature};

/// Collects the first error raised inside a quadrature integrand.
#[derive(Default)]
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn guard(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    fn finish(self, v: Result<f64>) -> Result<f64> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => v,
        }
    }
}

/// `|int p_t(z, y) p_s(y, x) dmu(y) - p_{t+s}(z, x)|`.
///
/// Product kernels (Euclidean, torus) integrate coordinate by coordinate;
/// H^3 integrates in geodesic polar coordinates about `x`; compactified
/// models add the atom at the cemetery.
pub fn chapman_kolmogorov_residual(k: &TransitionKernel, s: f64, t: f64, x: &Point, z: &Point) -> Result<f64> {
    check_time(s)?;
    check_time(t)?;
    let model = k.model();
    model.validate_point(x)?;
    model.validate_point(z)?;
    let q = Quadrature::with_tolerance(k.quadrature().tolerance.min(1e-12));
    let scale = (4.0 * s.max(t)).sqrt();

    if model.is_compactified() {
        let lhs = compactified_convolution(k, s, t, x, z, &q)?;
        let rhs = k.eval_compactified(s + t, z, x)?;
        return Ok((lhs - rhs).abs());
    }

    let lhs = if k.kind() == KernelKind::Cauchy {
        let (xv, zv) = (x.coords()[0], z.coords()[0]);
        let width = s.max(t).max((xv - zv).abs());
        let centre = 0.5 * (xv + zv);
        let f = |u: f64| {
            let y = centre + width * u.tan();
            let jac = width / (u.cos() * u.cos());
            let a = t / (PI * (t * t + (zv - y) * (zv - y)));
            let b = s / (PI * (s * s + (y - xv) * (y - xv)));
            let v = a * b * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        q.integrate(f, -0.5 * PI, 0.5 * PI)?
    } else {
        match model {
            ManifoldModel::Euclidean { .. } => {
                let mut prod = 1.0;
                for (xi, zi) in x.coords().iter().zip(z.coords()) {
                    let f = |y: f64| series::gaussian_1d(zi - y, t) * series::gaussian_1d(y - xi, s);
                    prod *= q.integrate_line(f, 0.5 * (xi + zi), scale)?;
                }
                prod
            }
            ManifoldModel::FlatTorus { .. } | ManifoldModel::Circle { .. } => {
                let periods = model.periods().expect("periodic");
                let mut prod = 1.0;
                for ((xi, zi), l) in x.coords().iter().zip(z.coords()).zip(&periods) {
                    let circle = TransitionKernel::heat(ManifoldModel::Circle { circumference: *l })?
                        .with_truncation(*k.truncation());
                    let slot = ErrorSlot::default();
                    let v = q.integrate(
                        |y| slot.guard(circle.density(t, &[*zi], &[y]).and_then(|a| Ok(a * circle.density(s, &[y], &[*xi])?))),
                        0.0,
                        *l,
                    );
                    prod *= slot.finish(v)?;
                }
                prod
            }
            ManifoldModel::Hyperbolic3 => {
                let d = model.distance_unchecked(x.coords(), z.coords());
                let (cd, sd) = (d.cosh(), d.sinh());
                let inner_q = Quadrature::with_tolerance(q.tolerance * 1e-2);
                let slot = ErrorSlot::default();
                let outer = |r: f64| {
                    let (cr, sr) = (r.cosh(), r.sinh());
                    let ps = hyperbolic_density(s, r);
                    if ps == 0.0 {
                        return 0.0;
                    }
                    let inner = inner_q.integrate(
                        |u| {
                            let c = (cd * cr - sd * sr * u).max(1.0);
                            hyperbolic_density(t, c.acosh())
                        },
                        -1.0,
                        1.0,
                    );
                    2.0 * PI * sr * sr * ps * slot.guard(inner)
                };
                let v = q.integrate_to_infinity(outer, 0.0, scale);
                slot.finish(v)?
            }
            ManifoldModel::DirichletInterval { length } => {
                let (xv, zv) = (x.coords()[0], z.coords()[0]);
                let p = *k.truncation();
                let slot = ErrorSlot::default();
                let v = q.integrate(
                    |y| {
                        slot.guard(
                            dirichlet_density(zv, y, *length, t, &p)
                                .and_then(|a| Ok(a * dirichlet_density(y, xv, *length, s, &p)?)),
                        )
                    },
                    0.0,
                    *length,
                );
                slot.finish(v)?
            }
            ManifoldModel::Compactified(_) => unreachable!(),
        }
    };
    let rhs = k.eval(s + t, z, x)?;
    Ok((lhs - rhs).abs())
}

/// `int_{S u {inf}} p^_t(z, y) p^_s(y, x) dmu^(y)` where the cemetery
/// carries unit mass.
fn compactified_convolution(k: &TransitionKernel, s: f64, t: f64, x: &Point, z: &Point, q: &Quadrature) -> Result<f64> {
    let length = match k.model().base() {
        ManifoldModel::DirichletInterval { length } => *length,
        other => return Err(Error::UnsupportedModel(format!("compactified {other}"))),
    };
    let slot = ErrorSlot::default();
    let interior = q.integrate(
        |y| {
            if y <= 0.0 || y >= length {
                return 0.0;
            }
            let yp = Point::scalar(y);
            slot.guard(
                k.eval_compactified(t, z, &yp)
                    .and_then(|a| Ok(a * k.eval_compactified(s, &yp, x)?)),
            )
        },
        0.0,
        length,
    );
    let interior = slot.finish(interior)?;
    let inf = Point::cemetery();
    let atom = k.eval_compactified(t, z, &inf)? * k.eval_compactified(s, &inf, x)?;
    Ok(interior + atom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    /// `int rho(z, y)^a p_tau(z, y) dmu(z) / tau^{1+b}`
    Integrated,
    /// `sup_z rho(z, y)^a p_tau(z, y) / tau^{1+b}`
    Pointwise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheckConfig {
    pub a: f64,
    pub b: f64,
    pub tau_grid: Vec<f64>,
    /// Every `tau` must lie in `(0, epsilon)`.
    pub epsilon: f64,
    pub mode: MomentMode,
    pub tolerance: f64,
    /// Base point `y`; the model origin when absent.
    pub at: Option<Point>,
}

impl MomentCheckConfig {
    pub fn new(a: f64, b: f64, mode: MomentMode) -> Self {
        MomentCheckConfig {
            a,
            b,
            tau_grid: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            epsilon: 1.0,
            mode,
            tolerance: 1e-12,
            at: None,
        }
    }

    /// Pointwise exponent pairing `a = 2b + n + 2` for an `n`-dimensional model.
    pub fn pointwise_for_dim(b: f64, dim: usize) -> Self {
        Self::new(2.0 * b + dim as f64 + 2.0, b, MomentMode::Pointwise)
    }

    pub fn with_taus(mut self, taus: Vec<f64>) -> Self {
        self.tau_grid = taus;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub taus: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio over the grid: the empirical constant `C`.
    pub worst_constant: f64,
    /// `max / min` ratio over the grid; 1 for exact power-law scaling.
    pub spread: f64,
}

pub fn moment_check(k: &TransitionKernel, cfg: &MomentCheckConfig) -> Result<MomentReport> {
    if !(cfg.a > 0.0 && cfg.b > 0.0) {
        return Err(Error::param("a, b", "moment exponents must be positive"));
    }
    if cfg.tau_grid.is_empty() {
        return Err(Error::param("tau_grid", "empty"));
    }
    for &tau in &cfg.tau_grid {
        if !(tau > 0.0 && tau < cfg.epsilon) {
            return Err(Error::param("tau_grid", format!("{tau} outside (0, {})", cfg.epsilon)));
        }
    }
    let model = k.model();
    if model.is_compactified() {
        return Err(Error::UnsupportedModel("moment checks act on the base model".into()));
    }
    let y = cfg.at.clone().unwrap_or_else(|| model.origin());
    model.validate_point(&y)?;
    let q = Quadrature::with_tolerance(cfg.tolerance);
    let mut ratios = Vec::with_capacity(cfg.tau_grid.len());
    for &tau in &cfg.tau_grid {
        let m = match cfg.mode {
            MomentMode::Integrated => integrated_moment(k, tau, cfg.a, &y, &q)?,
            MomentMode::Pointwise => pointwise_moment(k, tau, cfg.a, &y)?,
        };
        ratios.push(m / tau.powf(1.0 + cfg.b));
    }
    let worst = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let least = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MomentReport {
        taus: cfg.tau_grid.clone(),
        ratios,
        worst_constant: worst,
        spread: worst / least,
    })
}

fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(0.5 * n as f64) / gamma(0.5 * n as f64)
}

fn integrated_moment(k: &TransitionKernel, tau: f64, a: f64, y: &Point, q: &Quadrature) -> Result<f64> {
    let scale = (4.0 * tau).sqrt();
    if k.kind() == KernelKind::Cauchy {
        let v = q.integrate_to_infinity(|r| r.powf(a) * tau / (PI * (tau * tau + r * r)), 0.0, tau)?;
        return Ok(2.0 * v);
    }
    let model = k.model();
    match model {
        ManifoldModel::Euclidean { dim } => {
            let n = *dim as f64;
            let norm = (4.0 * PI * tau).powf(-0.5 * n);
            let v = q.integrate_to_infinity(|r| r.powf(a + n - 1.0) * (-r * r / (4.0 * tau)).exp(), 0.0, scale)?;
            Ok(sphere_area(*dim) * norm * v)
        }
        ManifoldModel::Hyperbolic3 => {
            let v = q.integrate_to_infinity(
                |r| r.powf(a) * hyperbolic_density(tau, r) * r.sinh() * r.sinh(),
                0.0,
                scale,
            )?;
            Ok(4.0 * PI * v)
        }
        ManifoldModel::Circle { circumference } => {
            let l = *circumference;
            let slot = ErrorSlot::default();
            let v = q.integrate(
                |d| slot.guard(series::theta_sum(d, l, tau, k.truncation()).map(|p| d.powf(a) * p)),
                0.0,
                0.5 * l,
            );
            Ok(2.0 * slot.finish(v)?)
        }
        ManifoldModel::DirichletInterval { length } => {
            let yv = y.coords()[0];
            let slot = ErrorSlot::default();
            let v = q.integrate(
                |z| slot.guard(dirichlet_density(z, yv, *length, tau, k.truncation()).map(|p| (z - yv).abs().powf(a) * p)),
                0.0,
                *length,
            );
            slot.finish(v)
        }
        other => Err(Error::UnsupportedModel(format!("integrated moment check on {other}"))),
    }
}

fn pointwise_moment(k: &TransitionKernel, tau: f64, a: f64, y: &Point) -> Result<f64> {
    let model = k.model();
    // radial models: the supremum must be attained well inside the bracket
    let radial = |f: &dyn Fn(f64) -> f64, reach: f64| -> Result<f64> {
        let (arg, v) = maximize(f, 0.0, reach)?;
        if arg > 0.9 * reach {
            return Err(Error::Divergent(format!(
                "rho^a p_tau keeps growing up to rho = {arg}; the supremum is infinite"
            )));
        }
        Ok(v)
    };
    if k.kind() == KernelKind::Cauchy {
        return radial(&|r: f64| r.powf(a) * tau / (PI * (tau * tau + r * r)), 1e6 * tau);
    }
    let reach = (4.0 * tau * (a + 80.0)).sqrt();
    match model {
        ManifoldModel::Euclidean { dim } => {
            let norm = (4.0 * PI * tau).powf(-0.5 * *dim as f64);
            radial(&|r: f64| norm * r.powf(a) * (-r * r / (4.0 * tau)).exp(), reach)
        }
        ManifoldModel::Hyperbolic3 => radial(&|r: f64| r.powf(a) * hyperbolic_density(tau, r), reach),
        ManifoldModel::Circle { circumference } => {
            let l = *circumference;
            let slot = ErrorSlot::default();
            let (_, v) = maximize(
                |d| slot.guard(series::theta_sum(d, l, tau, k.truncation()).map(|p| d.powf(a) * p)),
                0.0,
                0.5 * l,
            )?;
            slot.finish(Ok(v))
        }
        ManifoldModel::DirichletInterval { length } => {
            let yv = y.coords()[0];
            let slot = ErrorSlot::default();
            let (_, v) = maximize(
                |z| slot.guard(dirichlet_density(z, yv, *length, tau, k.truncation()).map(|p| (z - yv).abs().powf(a) * p)),
                0.0,
                *length,
            )?;
            slot.finish(Ok(v))
        }
        other => Err(Error::UnsupportedModel(format!("pointwise moment check on {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaFamilyPoint {
    pub t: f64,
    /// `int u(z) p_t(z, y) dmu(z)`
    pub smoothed: f64,
    /// `u(y)`
    pub target: f64,
    pub error: f64,
}

/// Smooths the bump `u` centred at `y` with the kernel for each `t`;
/// the error should vanish as `t` decreases. The bump is
/// `exp(-rho(z, y)^2)`, or `exp(sum_i cos(2 pi d_i / L_i) - 1)` on
/// periodic models.
pub fn delta_family_check(k: &TransitionKernel, y: &Point, ts: &[f64]) -> Result<Vec<DeltaFamilyPoint>> {
    let model = k.model();
    if model.is_compactified() {
        return Err(Error::UnsupportedModel("delta-family check acts on the base model".into()));
    }
    model.validate_point(y)?;
    let q = Quadrature::with_tolerance(k.quadrature().tolerance.min(1e-12));
    ts.iter()
        .map(|&t| {
            check_time(t)?;
            let smoothed = smooth_bump(k, t, y, &q)?;
            Ok(DeltaFamilyPoint {
                t,
                smoothed,
                target: 1.0,
                error: (smoothed - 1.0).abs(),
            })
        })
        .collect()
}

fn smooth_bump(k: &TransitionKernel, t: f64, y: &Point, q: &Quadrature) -> Result<f64> {
    let scale = (4.0 * t).sqrt().max(0.25);
    if k.kind() == KernelKind::Cauchy {
        let f = |u: f64| {
            let r = u.tan();
            let v = (-r * r).exp() * t / (PI * (t * t + r * r)) / (u.cos() * u.cos());
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        return q.integrate(f, -0.5 * PI, 0.5 * PI);
    }
    match k.model() {
        ManifoldModel::Euclidean { dim } => {
            let one = q.integrate_line(|u| (-u * u).exp() * series::gaussian_1d(u, t), 0.0, scale)?;
            Ok(one.powi(*dim as i32))
        }
        ManifoldModel::Hyperbolic3 => {
            let v = q.integrate_to_infinity(
                |r| (-r * r).exp() * hyperbolic_density(t, r) * r.sinh() * r.sinh(),
                0.0,
                scale,
            )?;
            Ok(4.0 * PI * v)
        }
        ManifoldModel::FlatTorus { .. } | ManifoldModel::Circle { .. } => {
            let mut prod = 1.0;
            for l in k.model().periods().expect("periodic") {
                let slot = ErrorSlot::default();
                let v = q.integrate(
                    |d| {
                        slot.guard(
                            series::theta_sum(d, l, t, k.truncation())
                                .map(|p| ((2.0 * PI * d / l).cos() - 1.0).exp() * p),
                        )
                    },
                    -0.5 * l,
                    0.5 * l,
                );
                prod *= slot.finish(v)?;
            }
            Ok(prod)
        }
        ManifoldModel::DirichletInterval { length } => {
            let yv = y.coords()[0];
            let slot = ErrorSlot::default();
            let v = q.integrate(
                |z| slot.guard(dirichlet_density(z, yv, *length, t, k.truncation()).map(|p| (-(z - yv) * (z - yv)).exp() * p)),
                0.0,
                *length,
            );
            slot.finish(v)
        }
        ManifoldModel::Compactified(_) => unreachable!(),
    }
}
