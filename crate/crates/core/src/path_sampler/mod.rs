//! Grid skeletons of Wiener-measure and bridge paths.
//!
//! A sampled [`Path`] is exact in its finite-dimensional law: the joint
//! density of the points at the grid times is the product of transition
//! densities. Nothing is claimed between grid points.

mod bridge;
mod covering;
mod step;

pub use bridge::{bridge_total_mass, sample_bridge, sample_bridge_detailed, BridgeSample};
pub use covering::{lift_path, project_path};
pub use step::{RadialMethod, StepSampler, MAX_REJECTIONS};
pub(crate) use bridge::BridgeSampler;

use rand::Rng;

use crate::error::{Error, Result};
use crate::heat_kernel::TransitionKernel;
use crate::manifold::Point;
use crate::rng::RngContract;

/// Strictly increasing sample times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::param("grid", "needs at least one step"));
        }
        if times[0] != 0.0 {
            return Err(Error::param("grid", "must start at time 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::param("grid", "times must be finite and strictly increasing"));
        }
        Ok(TimeGrid { times })
    }

    /// `n` equal steps up to `horizon`; the last time is `horizon` exactly.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("t", format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        let mut times: Vec<f64> = (0..=n).map(|j| horizon * j as f64 / n as f64).collect();
        times[n] = horizon;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Points at the grid times; once killed, a path stays in the cemetery.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    points: Vec<Point>,
    kill_index: Option<usize>,
}

impl Path {
    pub fn new(grid: TimeGrid, points: Vec<Point>) -> Result<Self> {
        if points.len() != grid.times().len() {
            return Err(Error::DimensionMismatch {
                expected: grid.times().len(),
                got: points.len(),
            });
        }
        let kill_index = points.iter().position(Point::is_cemetery);
        if kill_index == Some(0) {
            return Err(Error::Domain("a path cannot start in the cemetery".into()));
        }
        if let Some(k) = kill_index {
            if !points[k..].iter().all(Point::is_cemetery) {
                return Err(Error::Domain("the cemetery is absorbing".into()));
            }
        }
        Ok(Path {
            grid,
            points,
            kill_index,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn start(&self) -> &Point {
        &self.points[0]
    }

    pub fn end(&self) -> &Point {
        self.points.last().expect("non-empty path")
    }

    pub fn kill_index(&self) -> Option<usize> {
        self.kill_index
    }

    pub fn is_killed(&self) -> bool {
        self.kill_index.is_some()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// Draws a path of the Markov chain with step densities `p_{dt}` on `grid`.
pub fn sample_path(k: &TransitionKernel, x0: &Point, grid: &TimeGrid, rng: &RngContract) -> Result<Path> {
    let sampler = StepSampler::new(k)?;
    let mut stream = rng.stream();
    sample_path_with(&sampler, x0, grid, &mut stream)
}

pub(crate) fn sample_path_with<R: Rng + ?Sized>(
    sampler: &StepSampler,
    x0: &Point,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Path> {
    let mut points = Vec::with_capacity(grid.times().len());
    points.push(x0.clone());
    walk(sampler, x0, grid, rng, |_, p| {
        points.push(match p {
            Some(c) => Point::new(c.to_vec()),
            None => Point::cemetery(),
        })
    })?;
    Path::new(grid.clone(), points)
}

/// Runs the chain from `x0`, calling `visit(j, point)` for grid indices
/// `j = 1..=n`; `None` marks the cemetery.
pub(crate) fn walk<R: Rng + ?Sized, F: FnMut(usize, Option<&[f64]>)>(
    sampler: &StepSampler,
    x0: &Point,
    grid: &TimeGrid,
    rng: &mut R,
    mut visit: F,
) -> Result<()> {
    sampler.kernel().model().validate_point(x0)?;
    if x0.is_cemetery() {
        return Err(Error::Domain("paths start at an interior point".into()));
    }
    let mut current = x0.coords().to_vec();
    let mut next = Vec::with_capacity(current.len());
    let times = grid.times();
    for j in 1..times.len() {
        let dt = times[j] - times[j - 1];
        if sampler.step(&current, dt, rng, &mut next)? {
            std::mem::swap(&mut current, &mut next);
            visit(j, Some(&current));
        } else {
            for jj in j..times.len() {
                visit(jj, None);
            }
            return Ok(());
        }
    }
    Ok(())
}
