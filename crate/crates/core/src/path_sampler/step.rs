use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::heat_kernel::{gaussian_1d, KernelKind, TransitionKernel};
use crate::manifold::{hyperbolic_exp, reduce, ManifoldModel};

/// Attempts allowed per rejection-sampled step before giving up.
pub const MAX_REJECTIONS: usize = 10_000;

/// How the geodesic radius of an H^3 step is drawn.
///
/// The radial law of the H^3 kernel at time `t` has density proportional
/// to `r sinh(r) exp(-r^2 / 4t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadialMethod {
    /// `r = |sqrt(2t) Z + 2t e_1|` for a standard normal 3-vector `Z`: the
    /// noncentral chi law with three degrees of freedom and noncentrality
    /// `sqrt(2t)` (in units of `sqrt(2t)`) has exactly the density above.
    #[default]
    NoncentralChi,
    /// Envelope `(r/2) e^t exp(-(r - 2t)^2 / 4t)` with acceptance
    /// probability `1 - exp(-2r)`; the envelope itself is drawn as a
    /// mixture of a two-sided Rayleigh and a normal around `2t`.
    Rejection,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Euclidean,
    Periodic,
    Hyperbolic,
    Cauchy,
    KilledInterval { length: f64 },
}

/// Draws one transition `x -> y` from `p_dt(y, x)`.
#[derive(Debug, Clone)]
pub struct StepSampler {
    kernel: TransitionKernel,
    kind: Kind,
    periods: Vec<f64>,
    radial: RadialMethod,
}

impl StepSampler {
    pub fn new(k: &TransitionKernel) -> Result<Self> {
        let kind = if k.kind() == KernelKind::Cauchy {
            Kind::Cauchy
        } else {
            match k.model() {
                ManifoldModel::Euclidean { .. } => Kind::Euclidean,
                ManifoldModel::FlatTorus { .. } | ManifoldModel::Circle { .. } => Kind::Periodic,
                ManifoldModel::Hyperbolic3 => Kind::Hyperbolic,
                ManifoldModel::Compactified(base) => match **base {
                    ManifoldModel::DirichletInterval { length } => Kind::KilledInterval { length },
                    _ => return Err(Error::UnsupportedModel(format!("sampling on {}", k.model()))),
                },
                ManifoldModel::DirichletInterval { .. } => {
                    return Err(Error::UnsupportedModel(
                        "the Dirichlet kernel loses mass; sample on its compactification".into(),
                    ))
                }
            }
        };
        Ok(StepSampler {
            kernel: k.clone(),
            kind,
            periods: k.model().periods().unwrap_or_default(),
            radial: RadialMethod::default(),
        })
    }

    pub fn with_radial_method(mut self, radial: RadialMethod) -> Self {
        self.radial = radial;
        self
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    /// Writes the new position into `out`; returns `false` when the step
    /// is absorbed into the cemetery.
    pub fn step<R: Rng + ?Sized>(&self, from: &[f64], dt: f64, rng: &mut R, out: &mut Vec<f64>) -> Result<bool> {
        out.clear();
        let sd = (2.0 * dt).sqrt();
        match self.kind {
            Kind::Euclidean => {
                out.extend(from.iter().map(|x| x + sd * rng.sample::<f64, _>(StandardNormal)));
                Ok(true)
            }
            Kind::Periodic => {
                out.extend(
                    from.iter()
                        .zip(&self.periods)
                        .map(|(x, l)| reduce(x + sd * rng.sample::<f64, _>(StandardNormal), *l)),
                );
                Ok(true)
            }
            Kind::Cauchy => {
                let u: f64 = rng.random();
                out.push(from[0] + dt * (PI * (u - 0.5)).tan());
                Ok(true)
            }
            Kind::Hyperbolic => {
                let r = self.hyperbolic_radius(dt, rng)?;
                let dir = uniform_direction(rng);
                out.extend_from_slice(&hyperbolic_exp(from, dir, r));
                Ok(true)
            }
            Kind::KilledInterval { length } => {
                // free proposal thinned by p_D / p_free <= 1 (maximum principle)
                let x = from[0];
                let y = x + sd * rng.sample::<f64, _>(StandardNormal);
                if !(y > 0.0 && y < length) {
                    return Ok(false);
                }
                let free = gaussian_1d(y - x, dt);
                let killed = self.kernel.density(dt, &[y], &[x])?;
                let u: f64 = rng.random();
                if u * free < killed {
                    out.push(y);
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
        }
    }

    pub(crate) fn hyperbolic_radius<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        match self.radial {
            RadialMethod::NoncentralChi => {
                let s = (2.0 * t).sqrt();
                let a = s * rng.sample::<f64, _>(StandardNormal) + 2.0 * t;
                let b = s * rng.sample::<f64, _>(StandardNormal);
                let c = s * rng.sample::<f64, _>(StandardNormal);
                Ok((a * a + b * b + c * c).sqrt())
            }
            RadialMethod::Rejection => hyperbolic_radius_rejection(t, rng),
        }
    }
}

fn hyperbolic_radius_rejection<R: Rng + ?Sized>(t: f64, rng: &mut R) -> Result<f64> {
    let mu = 2.0 * t;
    let sigma = (2.0 * t).sqrt();
    // weights of |r - mu| phi and mu phi
    let w_rayleigh = sigma * (2.0 / PI).sqrt();
    let p_rayleigh = w_rayleigh / (w_rayleigh + mu);
    for _ in 0..MAX_REJECTIONS {
        let r = if rng.random::<f64>() < p_rayleigh {
            let u: f64 = 1.0 - rng.random::<f64>();
            let half = sigma * (-2.0 * u.ln()).sqrt();
            if rng.random::<bool>() {
                mu + half
            } else {
                mu - half
            }
        } else {
            mu + sigma * rng.sample::<f64, _>(StandardNormal)
        };
        if r <= 0.0 {
            continue;
        }
        let accept = r * (-(-2.0 * r).exp_m1()) / ((r - mu).abs() + mu);
        if rng.random::<f64>() < accept {
            return Ok(r);
        }
    }
    Err(Error::RejectionBudget {
        attempts: MAX_REJECTIONS,
        context: format!("H^3 radial step at dt = {t}"),
    })
}

pub(crate) fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}
