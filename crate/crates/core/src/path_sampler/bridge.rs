//! Normalized Brownian bridges.
//!
//! The conditional Wiener measure pinned at `y0` has total mass
//! `p_T(y0, x0)`; samplers here draw from the normalized law and
//! [`bridge_total_mass`] restores the mass when needed.

use rand::Rng;
use rand_distr::StandardNormal;

use super::step::{StepSampler, MAX_REJECTIONS};
use super::{Path, TimeGrid};
use crate::error::{Error, Result};
use crate::heat_kernel::{ln_rho_over_sinh, theta_terms, KernelKind, TransitionKernel};
use crate::manifold::{reduce, ManifoldModel, Point};
use crate::rng::RngContract;

/// A bridge together with sampler bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeSample {
    pub path: Path,
    /// Lattice coefficients of the lift `gamma y0~` the bridge was drawn
    /// towards (tori and circles only).
    pub winding: Option<Vec<i64>>,
    /// Proposals made by rejection steps (H^3 only).
    pub proposals: usize,
    pub acceptances: usize,
}

/// Mass `p_T(y0, x0)` of the unnormalized bridge measure.
pub fn bridge_total_mass(k: &TransitionKernel, x0: &Point, y0: &Point, horizon: f64) -> Result<f64> {
    k.eval(horizon, y0, x0)
}

pub fn sample_bridge(k: &TransitionKernel, x0: &Point, y0: &Point, grid: &TimeGrid, rng: &RngContract) -> Result<Path> {
    Ok(sample_bridge_detailed(k, x0, y0, grid, rng)?.path)
}

pub fn sample_bridge_detailed(
    k: &TransitionKernel,
    x0: &Point,
    y0: &Point,
    grid: &TimeGrid,
    rng: &RngContract,
) -> Result<BridgeSample> {
    let sampler = BridgeSampler::new(k)?;
    let mut stream = rng.stream();
    let mut points = Vec::with_capacity(grid.times().len());
    points.push(x0.clone());
    let stats = sampler.walk(x0, y0, grid, &mut stream, |_, c| points.push(Point::new(c.to_vec())))?;
    Ok(BridgeSample {
        path: Path::new(grid.clone(), points)?,
        winding: stats.winding,
        proposals: stats.proposals,
        acceptances: stats.acceptances,
    })
}

#[derive(Debug, Default)]
pub(crate) struct BridgeStats {
    pub winding: Option<Vec<i64>>,
    pub proposals: usize,
    pub acceptances: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct BridgeSampler {
    kernel: TransitionKernel,
    step: Option<StepSampler>,
}

impl BridgeSampler {
    pub fn new(k: &TransitionKernel) -> Result<Self> {
        if k.kind() == KernelKind::Cauchy {
            return Err(Error::UnsupportedModel("bridges of the Cauchy process".into()));
        }
        let step = match k.model() {
            ManifoldModel::Euclidean { .. } | ManifoldModel::FlatTorus { .. } | ManifoldModel::Circle { .. } => None,
            ManifoldModel::Hyperbolic3 => Some(StepSampler::new(k)?),
            other => return Err(Error::UnsupportedModel(format!("bridges on {other}"))),
        };
        Ok(BridgeSampler {
            kernel: k.clone(),
            step,
        })
    }

    /// Emits `visit(j, coords)` for `j = 1..=n`; the last point is `y0`.
    pub fn walk<R: Rng + ?Sized, F: FnMut(usize, &[f64])>(
        &self,
        x0: &Point,
        y0: &Point,
        grid: &TimeGrid,
        rng: &mut R,
        mut visit: F,
    ) -> Result<BridgeStats> {
        let model = self.kernel.model();
        model.validate_point(x0)?;
        model.validate_point(y0)?;
        let times = grid.times();
        let horizon = grid.horizon();
        let mut stats = BridgeStats::default();
        match model {
            ManifoldModel::Euclidean { .. } => {
                euclidean_bridge(x0.coords(), y0.coords(), times, rng, |j, c| visit(j, c));
            }
            ManifoldModel::FlatTorus { .. } | ManifoldModel::Circle { .. } => {
                let periods = model.periods().expect("periodic");
                // winding decomposition: pick the deck element, bridge to that lift, project
                let mut target = Vec::with_capacity(periods.len());
                let mut winding = Vec::with_capacity(periods.len());
                for ((x, y), l) in x0.coords().iter().zip(y0.coords()).zip(&periods) {
                    let terms = theta_terms(y - x, *l, horizon, self.kernel.truncation())?;
                    let k = draw_weighted(&terms, rng);
                    winding.push(k);
                    target.push(y + k as f64 * l);
                }
                let last = times.len() - 1;
                let mut projected = Vec::with_capacity(periods.len());
                euclidean_bridge(x0.coords(), &target, times, rng, |j, c| {
                    if j == last {
                        visit(j, y0.coords());
                    } else {
                        projected.clear();
                        projected.extend(c.iter().zip(&periods).map(|(v, l)| reduce(*v, *l)));
                        visit(j, &projected);
                    }
                });
                stats.winding = Some(winding);
            }
            ManifoldModel::Hyperbolic3 => {
                let step = self.step.as_ref().expect("H^3 step sampler");
                let y = y0.coords();
                let mut current = x0.coords().to_vec();
                let mut proposal = Vec::with_capacity(4);
                for j in 1..times.len() {
                    if j == times.len() - 1 {
                        visit(j, y);
                        break;
                    }
                    let dt = times[j] - times[j - 1];
                    let remaining = horizon - times[j];
                    let d = model.distance_unchecked(&current, y);
                    // propose from the free kernel at time dt*rem/(dt+rem) about the
                    // point a fraction dt/(dt+rem) of the way to y0; see hyperbolic_bridge_log_ratio
                    let w = dt / (dt + remaining);
                    let tau = dt * remaining / (dt + remaining);
                    let centre = geodesic_point(&current, y, d, w);
                    let mut accepted = false;
                    for _ in 0..MAX_REJECTIONS {
                        stats.proposals += 1;
                        step.step(&centre, tau, rng, &mut proposal)?;
                        let a = model.distance_unchecked(&current, &proposal);
                        let b = model.distance_unchecked(&proposal, y);
                        let r = model.distance_unchecked(&centre, &proposal);
                        let log_ratio = hyperbolic_bridge_log_ratio(a, b, r, d, dt, remaining);
                        if rng.random::<f64>().ln() < log_ratio {
                            accepted = true;
                            break;
                        }
                    }
                    if !accepted {
                        return Err(Error::RejectionBudget {
                            attempts: MAX_REJECTIONS,
                            context: format!(
                                "H^3 bridge step {j} of {} (dt = {dt}, remaining = {remaining}, acceptance so far {}/{})",
                                times.len() - 1,
                                stats.acceptances,
                                stats.proposals
                            ),
                        });
                    }
                    stats.acceptances += 1;
                    std::mem::swap(&mut current, &mut proposal);
                    visit(j, &current);
                }
            }
            _ => unreachable!("rejected in new()"),
        }
        Ok(stats)
    }
}

/// Log acceptance probability for a bridge step proposal `z` drawn from
/// `p_tau(., m)`, with `a = rho(x, z)`, `b = rho(z, y0)`, `r = rho(m, z)`
/// and `d = rho(x, y0)`. The target `p_dt(z, x) p_rem(y0, z)` over the
/// proposal is at most a constant times `exp(-d^2 / 4(dt + rem))`: the
/// Gaussian factors by the CAT(0) comparison
/// `(1 - w) a^2 + w b^2 >= r^2 + w (1 - w) d^2`, the `rho / sinh rho`
/// factors because `r <= max(a, b)`. The mean acceptance is
/// `e^{-tau} d / sinh d`, so the cost does not grow as steps shrink.
fn hyperbolic_bridge_log_ratio(a: f64, b: f64, r: f64, d: f64, dt: f64, rem: f64) -> f64 {
    let tau = dt * rem / (dt + rem);
    let gauss = -a * a / (4.0 * dt) - b * b / (4.0 * rem) + r * r / (4.0 * tau) + d * d / (4.0 * (dt + rem));
    let shape = ln_rho_over_sinh(a) + ln_rho_over_sinh(b) - ln_rho_over_sinh(r);
    (gauss + shape).min(0.0)
}

/// The point at fraction `w` along the geodesic from `p` to `q` on the
/// hyperboloid, given `d = rho(p, q)`.
fn geodesic_point(p: &[f64], q: &[f64], d: f64, w: f64) -> Vec<f64> {
    if d < 1e-12 {
        return p.to_vec();
    }
    let (cp, cq) = (((1.0 - w) * d).sinh() / d.sinh(), (w * d).sinh() / d.sinh());
    let mut m: Vec<f64> = p.iter().zip(q).map(|(x, y)| cp * x + cq * y).collect();
    m[0] = (1.0 + m[1] * m[1] + m[2] * m[2] + m[3] * m[3]).sqrt();
    m
}

/// Sequential Gaussian bridge in R^n for the generator `Delta`
/// (per-coordinate variance `2t`).
fn euclidean_bridge<R: Rng + ?Sized, F: FnMut(usize, &[f64])>(
    x0: &[f64],
    y0: &[f64],
    times: &[f64],
    rng: &mut R,
    mut visit: F,
) {
    let horizon = *times.last().expect("grid");
    let last = times.len() - 1;
    let mut current = x0.to_vec();
    for j in 1..=last {
        if j == last {
            current.copy_from_slice(y0);
        } else {
            let (t0, t1) = (times[j - 1], times[j]);
            let w = (t1 - t0) / (horizon - t0);
            let sd = (2.0 * (t1 - t0) * (horizon - t1) / (horizon - t0)).sqrt();
            for (c, y) in current.iter_mut().zip(y0) {
                *c += w * (y - *c) + sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        visit(j, &current);
    }
}

fn draw_weighted<R: Rng + ?Sized>(terms: &[(i64, f64)], rng: &mut R) -> i64 {
    let total: f64 = terms.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for &(k, w) in terms {
        if u < w {
            return k;
        }
        u -= w;
    }
    terms.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty").0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridges_end_at_y0() {
        let grid = TimeGrid::uniform(0.7, 10).unwrap();
        let cases: Vec<(&str, Point, Point)> = vec![
            ("euclidean:2", Point::new(vec![0.0, 0.0]), Point::new(vec![1.0, -0.5])),
            ("circle:1", 0.1.into(), 0.8.into()),
            ("torus:1,2", Point::new(vec![0.1, 0.2]), Point::new(vec![0.9, 1.9])),
            ("hyperbolic3", ManifoldModel::Hyperbolic3.origin(), Point::hyperboloid([0.3, 0.2, -0.1])),
        ];
        for (m, x0, y0) in cases {
            let model: ManifoldModel = m.parse().unwrap();
            let k = TransitionKernel::heat(model.clone()).unwrap();
            for i in 0..20 {
                let b = sample_bridge(&k, &x0, &y0, &grid, &RngContract::new(5, i)).unwrap();
                assert_eq!(b.start(), &x0);
                assert_eq!(b.end(), &y0, "{m}");
                for p in b.points() {
                    model.validate_point(p).unwrap();
                }
            }
        }
    }

    /// Midpoint of a 64-step H^3 bridge against the exact marginal
    /// `p_{T/2}(z, x0) p_{T/2}(y0, z)`, integrated over directions with the
    /// hyperbolic law of cosines.
    #[test]
    fn hyperbolic_bridge_midpoint_law() {
        use crate::quadrature::Quadrature;
        use crate::stats::{ks_p_value, ks_statistic};
        let (horizon, d) = (1.0, 0.8f64);
        let model = ManifoldModel::Hyperbolic3;
        let k = TransitionKernel::heat(model.clone()).unwrap();
        let x0 = model.origin();
        let y0 = Point::hyperboloid([d.sinh(), 0.0, 0.0]);
        let grid = TimeGrid::uniform(horizon, 64).unwrap();
        let n = 20_000;
        let radii: Vec<f64> = (0..n)
            .map(|i| {
                let b = sample_bridge(&k, &x0, &y0, &grid, &RngContract::new(17, i)).unwrap();
                model.distance(&x0, &b.points()[32]).unwrap()
            })
            .collect();

        let half = horizon / 2.0;
        let q = Quadrature::with_tolerance(1e-12);
        let density = |a: f64| {
            let inner = q
                .integrate(
                    |u| {
                        let c = (a.cosh() * d.cosh() - a.sinh() * d.sinh() * u).max(1.0);
                        hyperbolic_density_ref(half, c.acosh())
                    },
                    -1.0,
                    1.0,
                )
                .unwrap();
            a.sinh() * a.sinh() * hyperbolic_density_ref(half, a) * inner
        };
        let (top, cells) = (8.0, 4000);
        let h = top / cells as f64;
        let mut cdf = vec![0.0; cells + 1];
        let mut prev = density(0.0);
        for i in 1..=cells {
            let f = density(i as f64 * h);
            cdf[i] = cdf[i - 1] + 0.5 * h * (prev + f);
            prev = f;
        }
        let total = cdf[cells];
        let cdf_at = |a: f64| {
            let s = (a / h).clamp(0.0, cells as f64);
            let i = (s.floor() as usize).min(cells - 1);
            let f = s - i as f64;
            ((1.0 - f) * cdf[i] + f * cdf[i + 1]) / total
        };
        let ks = ks_statistic(&radii, cdf_at);
        assert!(ks_p_value(ks, radii.len()) > 0.001, "KS {ks}");
    }

    fn hyperbolic_density_ref(t: f64, rho: f64) -> f64 {
        let shape = if rho == 0.0 { 1.0 } else { rho / rho.sinh() };
        (-t).exp() * (4.0 * std::f64::consts::PI * t).powf(-1.5) * shape * (-rho * rho / (4.0 * t)).exp()
    }

    #[test]
    fn hyperbolic_bridge_cost_is_flat_in_the_step() {
        let model = ManifoldModel::Hyperbolic3;
        let k = TransitionKernel::heat(model.clone()).unwrap();
        let y0 = Point::hyperboloid([0.3, 0.2, 0.1]);
        for n in [8, 256] {
            let grid = TimeGrid::uniform(1.0, n).unwrap();
            let (mut p, mut a) = (0, 0);
            for i in 0..200 {
                let b = sample_bridge_detailed(&k, &model.origin(), &y0, &grid, &RngContract::new(3, i)).unwrap();
                p += b.proposals;
                a += b.acceptances;
            }
            assert!((p as f64) < 1.6 * a as f64, "n={n}: {p} proposals for {a} steps");
        }
    }

    #[test]
    fn unsupported_bridges() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let rng = RngContract::new(1, 0);
        assert!(sample_bridge(&TransitionKernel::cauchy(), &0.0.into(), &0.0.into(), &grid, &rng).is_err());
        let model = ManifoldModel::compactified(ManifoldModel::dirichlet_interval(1.0).unwrap()).unwrap();
        let k = TransitionKernel::heat(model).unwrap();
        assert!(matches!(
            sample_bridge(&k, &0.5.into(), &0.5.into(), &grid, &rng),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn total_mass_is_kernel_value() {
        let k = TransitionKernel::heat(ManifoldModel::euclidean(1).unwrap()).unwrap();
        let t = 1.0 / (4.0 * std::f64::consts::PI);
        assert!((bridge_total_mass(&k, &0.0.into(), &0.0.into(), t).unwrap() - 1.0).abs() < 1e-15);
        let h = TransitionKernel::heat(ManifoldModel::Hyperbolic3).unwrap();
        let o = ManifoldModel::Hyperbolic3.origin();
        assert!((bridge_total_mass(&h, &o, &o, 1.0).unwrap() - 8.259e-3).abs() < 1e-6);
    }
}
