//! Expected-distance curves, the dyadic Hölder estimator and stochastic
//! completeness checks.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use libm::{erf, lgamma as ln_gamma};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::ensemble::{map_samples, EstimateWithError, Workers};
use crate::error::{Error, Result};
use crate::heat_kernel::{check_time, KernelKind, TransitionKernel};
use crate::manifold::{CoveringDescriptor, ManifoldModel, Point};
use crate::path_sampler::{Path, StepSampler, TimeGrid};
use crate::rng::{derive_seed, RngContract};
use crate::stats::{chi_square, ChiSquareTest};

/// Mass deficit below which a model counts as stochastically complete.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-8;

/// Levels used by default for the Hölder fit.
pub const DEFAULT_HOLDER_LEVELS: RangeInclusive<u32> = 4..=12;

/// `E rho(x0, X_t)` in closed form.
pub fn expected_distance_analytic(model: &ManifoldModel, t: f64) -> Result<f64> {
    check_time(t)?;
    match *model {
        ManifoldModel::Euclidean { dim } => Ok(euclidean_distance_coefficient(dim) * t.sqrt()),
        ManifoldModel::Hyperbolic3 => {
            let s = t.sqrt();
            Ok((-t).exp() * 2.0 / PI.sqrt() * s + erf(s) * (1.0 + 2.0 * t))
        }
        ref other => Err(Error::UnsupportedModel(format!("closed-form expected distance on {other}"))),
    }
}

/// `2 Gamma((n+1)/2) / Gamma(n/2)`.
pub fn euclidean_distance_coefficient(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * (ln_gamma((n + 1.0) / 2.0) - ln_gamma(n / 2.0)).exp()
}

/// One-step Monte Carlo estimate of `E rho(x0, X_t)`.
pub fn expected_distance_mc(
    model: &ManifoldModel,
    x0: &Point,
    t: f64,
    n_samples: usize,
    seed: u64,
    workers: Workers,
) -> Result<EstimateWithError> {
    check_time(t)?;
    match model {
        ManifoldModel::Euclidean { .. }
        | ManifoldModel::Hyperbolic3
        | ManifoldModel::FlatTorus { .. }
        | ManifoldModel::Circle { .. } => {}
        other => return Err(Error::UnsupportedModel(format!("expected distance on {other}"))),
    }
    if n_samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    model.validate_point(x0)?;
    let sampler = StepSampler::new(&TransitionKernel::heat(model.clone())?)?;
    let samples = map_samples(n_samples, workers, |i| {
        let mut rng = RngContract::new(seed, i).stream();
        let mut out = Vec::with_capacity(x0.coords().len());
        sampler.step(x0.coords(), t, &mut rng, &mut out)?;
        Ok(model.distance_unchecked(x0.coords(), &out))
    })?;
    Ok(EstimateWithError::from_samples(&samples, seed))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub analytic: Option<f64>,
    pub mc: EstimateWithError,
}

/// Expected distance at each time; the estimate at `ts[i]` uses the
/// master seed derived from `(seed, i)`.
pub fn expected_distance_curve(
    model: &ManifoldModel,
    x0: &Point,
    ts: &[f64],
    n_samples: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<CurvePoint>> {
    ts.iter()
        .enumerate()
        .map(|(i, &t)| {
            let analytic = match expected_distance_analytic(model, t) {
                Ok(v) => Some(v),
                Err(Error::UnsupportedModel(_)) => None,
                Err(e) => return Err(e),
            };
            let mc = expected_distance_mc(model, x0, t, n_samples, derive_seed(seed, i as u64), workers)?;
            Ok(CurvePoint { t, analytic, mc })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub levels: Vec<u32>,
    /// `dt = T 2^{-n}` per level, decreasing.
    pub scales: Vec<f64>,
    /// Median over paths of `xi_n = max_k rho(X_{k dt}, X_{(k-1) dt})`.
    pub max_increments: Vec<f64>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
}

/// Fits `log2 xi_n ~ c - theta n` over `levels`. Every path must live on
/// the same uniform grid with `2^L` steps, `L` at least the finest level.
pub fn holder_exponent(model: &ManifoldModel, paths: &[Path], levels: RangeInclusive<u32>) -> Result<HolderReport> {
    let levels: Vec<u32> = levels.collect();
    if levels.len() < 3 {
        return Err(Error::param("levels", format!("need at least 3 levels, got {}", levels.len())));
    }
    let first = paths.first().ok_or_else(|| Error::param("paths", "empty ensemble"))?;
    let n_steps = first.grid().n_steps();
    let finest = *levels.iter().max().expect("non-empty");
    if !n_steps.is_power_of_two() || n_steps.trailing_zeros() < finest {
        return Err(Error::param(
            "paths",
            format!("need 2^{finest} steps or a finer dyadic grid, got {n_steps}"),
        ));
    }
    if paths.iter().any(|p| p.grid() != first.grid()) {
        return Err(Error::param("paths", "all paths must share one grid"));
    }
    if paths.iter().any(Path::is_killed) {
        return Err(Error::Domain("killed paths have no Hölder exponent".into()));
    }
    let horizon = first.grid().horizon();

    let mut scales = Vec::with_capacity(levels.len());
    let mut medians = Vec::with_capacity(levels.len());
    for &n in &levels {
        let stride = n_steps >> n;
        let mut xi: Vec<f64> = paths
            .iter()
            .map(|p| {
                let pts = p.points();
                (1..=(1usize << n))
                    .map(|k| model.distance_unchecked(pts[k * stride].coords(), pts[(k - 1) * stride].coords()))
                    .fold(0.0, f64::max)
            })
            .collect();
        xi.sort_by(f64::total_cmp);
        scales.push(horizon / (1u64 << n) as f64);
        medians.push(median_sorted(&xi));
    }
    if medians.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Domain("a level has zero median increment".into()));
    }
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.log2()).collect();
    let (slope, r_squared) = least_squares(&xs, &ys);
    Ok(HolderReport {
        levels,
        scales,
        max_increments: medians,
        fitted_exponent: -slope,
        r_squared,
    })
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Slope and coefficient of determination of the least-squares line.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Brownian path in R^n on `2^level` equal steps up to `horizon`, built by
/// midpoint insertion so every coarser dyadic grid sees the same path.
pub fn brownian_dyadic_path(dim: usize, horizon: f64, level: u32, rng: &RngContract) -> Result<Path> {
    check_time(horizon)?;
    if dim == 0 {
        return Err(Error::param("dim", "must be positive"));
    }
    let n = 1usize << level;
    let mut stream = rng.stream();
    let mut coords = vec![vec![0.0; dim]; n + 1];
    for c in coords[n].iter_mut() {
        *c = (2.0 * horizon).sqrt() * stream.sample::<f64, _>(StandardNormal);
    }
    let mut gap = n;
    while gap > 1 {
        let half = gap / 2;
        // the midpoint of a span of duration h has conditional variance h/2
        let sd = (horizon * gap as f64 / n as f64 / 2.0).sqrt();
        for left in (0..n).step_by(gap) {
            for d in 0..dim {
                let mean = 0.5 * (coords[left][d] + coords[left + gap][d]);
                coords[left + half][d] = mean + sd * stream.sample::<f64, _>(StandardNormal);
            }
        }
        gap = half;
    }
    Path::new(TimeGrid::uniform(horizon, n)?, coords.into_iter().map(Point::new).collect())
}

/// Independent paths on a `2^level` grid: nested midpoint paths for
/// Euclidean Brownian motion, plain step sampling otherwise.
pub fn dyadic_ensemble(
    kernel: &TransitionKernel,
    x0: &Point,
    horizon: f64,
    level: u32,
    n_paths: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<Path>> {
    let grid = TimeGrid::uniform(horizon, 1usize << level)?;
    match (kernel.kind(), kernel.model()) {
        (KernelKind::Heat, ManifoldModel::Euclidean { dim }) => {
            kernel.model().validate_point(x0)?;
            map_samples(n_paths, workers, |i| {
                let p = brownian_dyadic_path(*dim, horizon, level, &RngContract::new(seed, i))?;
                let shifted = p
                    .points()
                    .iter()
                    .map(|q| Point::new(q.coords().iter().zip(x0.coords()).map(|(a, b)| a + b).collect()))
                    .collect();
                Path::new(grid.clone(), shifted)
            })
        }
        _ => {
            let sampler = StepSampler::new(kernel)?;
            map_samples(n_paths, workers, |i| {
                let mut rng = RngContract::new(seed, i).stream();
                crate::path_sampler::sample_path_with(&sampler, x0, &grid, &mut rng)
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessEntry {
    pub t: f64,
    pub mass: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub entries: Vec<CompletenessEntry>,
    pub complete: bool,
    pub tolerance: f64,
}

/// Total mass at each `t`; complete when every deficit is below
/// [`COMPLETENESS_TOLERANCE`].
pub fn completeness_check(kernel: &TransitionKernel, ts: &[f64], x0: &Point) -> Result<CompletenessReport> {
    if ts.is_empty() {
        return Err(Error::param("t", "need at least one time"));
    }
    let entries = ts
        .iter()
        .map(|&t| {
            let mass = kernel.total_mass(t, x0)?;
            Ok(CompletenessEntry {
                t,
                mass,
                deficit: 1.0 - mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let complete = entries.iter().all(|e| e.deficit.abs() < COMPLETENESS_TOLERANCE);
    Ok(CompletenessReport {
        entries,
        complete,
        tolerance: COMPLETENESS_TOLERANCE,
    })
}

/// Fraction of grid times (after the start) at which the path lies in the
/// set. A coarse stand-in for occupation time: for a set of width `eps`
/// it should scale like `eps`.
pub fn occupation_fraction(path: &Path, inside: impl Fn(&Point) -> bool) -> f64 {
    let pts = &path.points()[1..];
    pts.iter().filter(|p| !p.is_cemetery() && inside(p)).count() as f64 / pts.len() as f64
}

/// Chi-square test of the time-`t` marginal of projected Euclidean paths
/// against the base kernel, one test per torus coordinate. Each coordinate
/// circle is cut into `bins` equal cells whose expected mass is the theta
/// kernel integrated in closed form.
pub fn covering_marginal_check(
    cov: &CoveringDescriptor,
    x0: &Point,
    grid: &TimeGrid,
    n_samples: usize,
    bins: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<ChiSquareTest>> {
    if bins < 2 {
        return Err(Error::param("bins", "need at least 2"));
    }
    let line = TransitionKernel::heat(cov.total().clone())?;
    let lift = cov.lift_point_near(x0, x0)?;
    let sampler = StepSampler::new(&line)?;
    let ends = map_samples(n_samples, workers, |i| {
        let mut rng = RngContract::new(seed, i).stream();
        let path = crate::path_sampler::sample_path_with(&sampler, &lift, grid, &mut rng)?;
        Ok(cov.project_point(path.end())?.coords().to_vec())
    })?;
    let t = grid.horizon();
    cov.periods()
        .iter()
        .enumerate()
        .map(|(c, &l)| {
            let width = l / bins as f64;
            let mut observed = vec![0u64; bins];
            for e in &ends {
                observed[((e[c] / width) as usize).min(bins - 1)] += 1;
            }
            let x = x0.coords()[c];
            let expected: Vec<f64> = (0..bins)
                .map(|b| n_samples as f64 * wrapped_gaussian_mass(b as f64 * width - x, (b + 1) as f64 * width - x, l, t))
                .collect();
            chi_square(&observed, &expected, 0)
        })
        .collect()
}

/// Mass of `[a, b]` (offsets from the source) under the circle kernel:
/// the Gaussian mass of every image `[a + kL, b + kL]`.
fn wrapped_gaussian_mass(a: f64, b: f64, l: f64, t: f64) -> f64 {
    let s = (4.0 * t).sqrt();
    let reach = (10.0 * s / l).ceil() as i64 + 1;
    (-reach..=reach)
        .map(|k| {
            let shift = k as f64 * l;
            0.5 * (libm::erf((b + shift) / s) - libm::erf((a + shift) / s))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingClass {
    pub winding: i64,
    pub observed: u64,
    pub expected: f64,
    /// `|observed - expected| / sqrt(n p (1 - p))`.
    pub z: f64,
}

/// Frequencies of the deck element drawn by circle bridges against the
/// normalized theta-term weights.
pub fn winding_frequency_check(
    circumference: f64,
    x0: f64,
    y0: f64,
    grid: &TimeGrid,
    n_samples: usize,
    seed: u64,
    workers: Workers,
) -> Result<Vec<WindingClass>> {
    let k = TransitionKernel::heat(ManifoldModel::circle(circumference)?)?;
    let terms = crate::heat_kernel::theta_terms(y0 - x0, circumference, grid.horizon(), k.truncation())?;
    let total: f64 = terms.iter().map(|(_, w)| w).sum();
    let (x, y) = (Point::scalar(x0), Point::scalar(y0));
    let drawn = map_samples(n_samples, workers, |i| {
        let b = crate::path_sampler::sample_bridge_detailed(&k, &x, &y, grid, &RngContract::new(seed, i))?;
        Ok(b.winding.expect("circle bridges record their winding")[0])
    })?;
    let n = n_samples as f64;
    Ok(terms
        .iter()
        .map(|&(w, weight)| {
            let p = weight / total;
            let observed = drawn.iter().filter(|&&d| d == w).count() as u64;
            let expected = n * p;
            let sd = (n * p * (1.0 - p)).sqrt();
            let gap = (observed as f64 - expected).abs();
            WindingClass {
                winding: w,
                observed,
                expected,
                z: if gap == 0.0 { 0.0 } else { gap / sd },
            }
        })
        .collect())
}
