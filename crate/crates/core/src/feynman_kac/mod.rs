//! Monte Carlo estimates of `e^{t(Delta - V)}` and its integral kernel by
//! time-sliced path functionals.
//!
//! Each sample draws one grid path (or bridge), sums `V` along it with the
//! chosen Riemann rule and weights the terminal value by `exp(-sum)`.
//! Killed paths contribute 0.

mod potential;
mod spectral;

pub use potential::{Potential, Terminal};
pub use spectral::{spectral_oracle, SemigroupMatrix};

use crate::ensemble::{map_samples, EstimateWithError, Workers};
use crate::error::{Error, Result};
use crate::heat_kernel::{TransitionKernel, TruncationPolicy};
use crate::manifold::{CoveringDescriptor, ManifoldModel, Point};
use crate::path_sampler::{walk, BridgeSampler, StepSampler, TimeGrid};
use crate::rng::{derive_seed, RngContract, DEFAULT_SEED};

/// How `int_0^t V(w(s)) ds` is discretized on the uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RiemannRule {
    /// `(t/n) sum_{j=1}^n V(w_j)`, the Trotter slicing.
    #[default]
    RightEndpoint,
    /// `(t/n) (V(w_0)/2 + V(w_1) + ... + V(w_n)/2)`.
    Trapezoid,
}

impl RiemannRule {
    fn weight(self, j: usize, n: usize) -> f64 {
        match self {
            RiemannRule::RightEndpoint => {
                if j == 0 {
                    0.0
                } else {
                    1.0
                }
            }
            RiemannRule::Trapezoid => {
                if j == 0 || j == n {
                    0.5
                } else {
                    1.0
                }
            }
        }
    }
}

/// Neumaier summation, so that a constant potential yields `exp(-ct)`
/// to within one rounding.
#[derive(Debug, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn new(x: f64) -> Self {
        CompensatedSum { sum: x, carry: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone)]
pub struct FKProblem {
    pub kernel: TransitionKernel,
    pub potential: Potential,
    /// Ignored by [`fk_kernel`], which pins the endpoint instead.
    pub terminal: Terminal,
    pub x0: Point,
    pub t: f64,
    pub n_steps: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub rule: RiemannRule,
    pub workers: Workers,
}

impl FKProblem {
    /// Defaults: `g = 1`, 64 steps, 10^4 samples, right-endpoint rule.
    pub fn new(kernel: TransitionKernel, potential: Potential, x0: Point, t: f64) -> Self {
        FKProblem {
            kernel,
            potential,
            terminal: Terminal::one(),
            x0,
            t,
            n_steps: 64,
            n_samples: 10_000,
            seed: DEFAULT_SEED,
            rule: RiemannRule::default(),
            workers: Workers::default(),
        }
    }

    pub fn with_terminal(mut self, terminal: Terminal) -> Self {
        self.terminal = terminal;
        self
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn with_samples(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rule(mut self, rule: RiemannRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<TimeGrid> {
        if self.n_samples == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        self.kernel.model().validate_point(&self.x0)?;
        if self.x0.is_cemetery() {
            return Err(Error::param("x0", "must be an interior point"));
        }
        TimeGrid::uniform(self.t, self.n_steps)
    }

    fn bound(&self) -> Option<f64> {
        self.terminal
            .sup_abs()
            .map(|g| (self.t * self.potential.sup_bound()).exp() * g)
    }
}

/// Per-sample values `g(w_n) exp(-R)` in sample-index order.
pub fn fk_samples(p: &FKProblem) -> Result<Vec<f64>> {
    let grid = p.validate()?;
    let sampler = StepSampler::new(&p.kernel)?;
    let n = p.n_steps;
    let dt = p.t / n as f64;
    let w0 = p.rule.weight(0, n) * p.potential.eval(&p.x0)?;
    map_samples(p.n_samples, p.workers, |i| {
        let mut rng = RngContract::new(p.seed, i).stream();
        let mut sum = CompensatedSum::new(w0);
        let mut end: Option<Vec<f64>> = None;
        let mut failure = None;
        walk(&sampler, &p.x0, &grid, &mut rng, |j, x| {
            if failure.is_some() {
                return;
            }
            if let Some(c) = x {
                match p.potential.eval_coords(c) {
                    Ok(v) => sum.add(p.rule.weight(j, n) * v),
                    Err(e) => failure = Some(e),
                }
                if j == n {
                    end = Some(c.to_vec());
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(p.terminal.eval_coords(end.as_deref()) * (-dt * sum.value()).exp())
    })
}

/// Estimates `(e^{t(Delta - V)} g)(x0)`.
pub fn fk_expectation(p: &FKProblem) -> Result<EstimateWithError> {
    let samples = fk_samples(p)?;
    let est = EstimateWithError::from_samples(&samples, p.seed);
    check_bound(est.value, p.bound())?;
    Ok(est)
}

fn check_bound(value: f64, bound: Option<f64>) -> Result<()> {
    match bound {
        Some(b) if !(value.abs() <= b * (1.0 + 1e-12)) => Err(Error::Domain(format!(
            "estimate {value} exceeds the a priori bound {b}"
        ))),
        _ => Ok(()),
    }
}

/// Normalized-bridge values `exp(-R)` in sample-index order, and the bridge
/// mass `p_t(y0, x0)` that scales them into kernel estimates.
pub fn fk_kernel_samples(p: &FKProblem, y0: &Point) -> Result<(Vec<f64>, f64)> {
    let grid = p.validate()?;
    let sampler = BridgeSampler::new(&p.kernel)?;
    p.kernel.model().validate_point(y0)?;
    let mass = p.kernel.eval(p.t, y0, &p.x0)?;
    let n = p.n_steps;
    let dt = p.t / n as f64;
    let w0 = p.rule.weight(0, n) * p.potential.eval(&p.x0)?;
    let samples = map_samples(p.n_samples, p.workers, |i| {
        let mut rng = RngContract::new(p.seed, i).stream();
        let mut sum = CompensatedSum::new(w0);
        let mut failure = None;
        sampler.walk(&p.x0, y0, &grid, &mut rng, |j, c| {
            if failure.is_none() {
                match p.potential.eval_coords(c) {
                    Ok(v) => sum.add(p.rule.weight(j, n) * v),
                    Err(e) => failure = Some(e),
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((-dt * sum.value()).exp())
    })?;
    Ok((samples, mass))
}

/// Estimates the Schrodinger kernel `q_t(x0, y0)`: the mean of `exp(-R)`
/// over normalized bridges, times `p_t(y0, x0)`.
pub fn fk_kernel(p: &FKProblem, y0: &Point) -> Result<EstimateWithError> {
    let (samples, mass) = fk_kernel_samples(p, y0)?;
    let est = EstimateWithError::from_samples(&samples, p.seed).scaled(mass);
    check_bound(est.value, Some((p.t * p.potential.sup_bound()).exp() * mass))?;
    Ok(est)
}

/// What a monotonicity check compares.
#[derive(Debug, Clone, PartialEq)]
pub enum FkTarget {
    Expectation,
    Kernel(Point),
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub first: EstimateWithError,
    pub second: EstimateWithError,
    /// Samples where `w_1 < w_2`; zero when the check passes.
    pub violations: Vec<u64>,
    /// Number of visited points at which `V1 <= V2` was confirmed.
    pub ordering_checks: usize,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.first.value >= self.second.value
    }
}

/// Runs `p.potential` (as `V1`) and `v2` on identical paths and checks
/// `exp(-R1) >= exp(-R2)` sample by sample. Every visited point also
/// verifies `V1 <= V2`. Terminal data must be nonnegative.
pub fn fk_monotonicity_check(p: &FKProblem, v2: &Potential, target: &FkTarget) -> Result<MonotonicityReport> {
    let grid = p.validate()?;
    let n = p.n_steps;
    let dt = p.t / n as f64;
    let v1 = &p.potential;
    let ordered = |x: &[f64]| -> Result<(f64, f64)> {
        let (a, b) = (v1.eval_coords(x)?, v2.eval_coords(x)?);
        if a > b {
            return Err(Error::PotentialOrdering { first: a, second: b });
        }
        Ok((a, b))
    };
    let (a0, b0) = ordered(p.x0.coords())?;
    let (w0a, w0b) = (p.rule.weight(0, n) * a0, p.rule.weight(0, n) * b0);

    let (pairs, scale) = match target {
        FkTarget::Expectation => {
            let sampler = StepSampler::new(&p.kernel)?;
            let pairs = map_samples(p.n_samples, p.workers, |i| {
                let mut rng = RngContract::new(p.seed, i).stream();
                let (mut s1, mut s2) = (w0a, w0b);
                let mut end: Option<Vec<f64>> = None;
                let mut failure = None;
                walk(&sampler, &p.x0, &grid, &mut rng, |j, x| {
                    if let (None, Some(c)) = (&failure, x) {
                        match ordered(c) {
                            Ok((a, b)) => {
                                s1 += p.rule.weight(j, n) * a;
                                s2 += p.rule.weight(j, n) * b;
                            }
                            Err(e) => failure = Some(e),
                        }
                        if j == n {
                            end = Some(c.to_vec());
                        }
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                let g = p.terminal.eval_coords(end.as_deref());
                if g < 0.0 {
                    return Err(Error::param("terminal", "monotonicity needs g >= 0"));
                }
                Ok((g * (-dt * s1).exp(), g * (-dt * s2).exp(), n + 1))
            })?;
            (pairs, 1.0)
        }
        FkTarget::Kernel(y0) => {
            let sampler = BridgeSampler::new(&p.kernel)?;
            p.kernel.model().validate_point(y0)?;
            let mass = p.kernel.eval(p.t, y0, &p.x0)?;
            let pairs = map_samples(p.n_samples, p.workers, |i| {
                let mut rng = RngContract::new(p.seed, i).stream();
                let (mut s1, mut s2) = (w0a, w0b);
                let mut failure = None;
                sampler.walk(&p.x0, y0, &grid, &mut rng, |j, c| {
                    if failure.is_none() {
                        match ordered(c) {
                            Ok((a, b)) => {
                                s1 += p.rule.weight(j, n) * a;
                                s2 += p.rule.weight(j, n) * b;
                            }
                            Err(e) => failure = Some(e),
                        }
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                Ok(((-dt * s1).exp(), (-dt * s2).exp(), n + 1))
            })?;
            (pairs, mass)
        }
    };

    let first: Vec<f64> = pairs.iter().map(|q| q.0).collect();
    let second: Vec<f64> = pairs.iter().map(|q| q.1).collect();
    let violations = pairs
        .iter()
        .enumerate()
        .filter(|(_, q)| q.0 < q.1)
        .map(|(i, _)| i as u64)
        .collect();
    Ok(MonotonicityReport {
        first: EstimateWithError::from_samples(&first, p.seed).scaled(scale),
        second: EstimateWithError::from_samples(&second, p.seed).scaled(scale),
        violations,
        ordering_checks: pairs.iter().map(|q| q.2).sum(),
    })
}

/// Settings shared by both sides of a covering-sum check.
#[derive(Debug, Clone)]
pub struct CoveringSumConfig {
    pub windings: i64,
    pub n_steps: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub rule: RiemannRule,
    pub workers: Workers,
}

#[derive(Debug, Clone)]
pub struct CoveringSumReport {
    pub base: EstimateWithError,
    /// `(deck coefficients, estimate of q~_t(x0~, gamma y0~))`.
    pub lifts: Vec<(Vec<i64>, EstimateWithError)>,
    pub lift_sum: f64,
    pub residual: f64,
    pub combined_std_error: f64,
    /// Bound on the omitted windings `|k_i| > W`.
    pub tail_bound: f64,
}

impl CoveringSumReport {
    pub fn passed(&self) -> bool {
        self.residual <= 3.0 * self.combined_std_error + self.tail_bound
    }
}

/// Compares `q_t(x0, y0)` on a torus or circle against the sum of
/// `q~_t(x0~, gamma y0~)` over deck elements with `|k_i| <= W`, using the
/// lifted potential `V o pi` on the cover. Each side uses its own seed.
pub fn fk_covering_sum_check(
    cov: &CoveringDescriptor,
    potential: &Potential,
    x0: &Point,
    y0: &Point,
    t: f64,
    cfg: &CoveringSumConfig,
) -> Result<CoveringSumReport> {
    if cfg.windings < 0 {
        return Err(Error::param("windings", "must be nonnegative"));
    }
    let base_kernel = TransitionKernel::heat(cov.base().clone())?;
    let total_kernel = TransitionKernel::heat(cov.total().clone())?;
    let problem = |kernel: TransitionKernel, v: Potential, x: Point, seed: u64| FKProblem {
        n_steps: cfg.n_steps,
        n_samples: cfg.n_samples,
        seed,
        rule: cfg.rule,
        workers: cfg.workers,
        ..FKProblem::new(kernel, v, x, t)
    };
    let base = fk_kernel(&problem(base_kernel, potential.clone(), x0.clone(), derive_seed(cfg.seed, 0)), y0)?;

    let lifted_v = potential.lifted(cov);
    let x_tilde = cov.lift_point_near(x0, x0)?;
    let y_tilde = cov.lift_point_near(y0, y0)?;
    let dim = cov.periods().len();
    let mut lifts = Vec::new();
    for (idx, k) in lattice_box(dim, cfg.windings).into_iter().enumerate() {
        let target = cov.deck_translate(&y_tilde, &k)?;
        let p = problem(
            total_kernel.clone(),
            lifted_v.clone(),
            x_tilde.clone(),
            derive_seed(cfg.seed, 1 + idx as u64),
        );
        lifts.push((k, fk_kernel(&p, &target)?));
    }
    let lift_sum: f64 = lifts.iter().map(|(_, e)| e.value).sum();
    let var: f64 = base.std_error.powi(2) + lifts.iter().map(|(_, e)| e.std_error.powi(2)).sum::<f64>();
    let tail = (t * potential.sup_bound()).exp()
        * winding_tail(x_tilde.coords(), y_tilde.coords(), cov.periods(), t, cfg.windings, total_kernel.truncation())?;
    Ok(CoveringSumReport {
        base,
        residual: (base.value - lift_sum).abs(),
        lift_sum,
        lifts,
        combined_std_error: var.sqrt(),
        tail_bound: tail,
    })
}

fn lattice_box(dim: usize, w: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-w..=w).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Bound on `sum_{k outside the box} prod_i g(d_i + k_i L_i)` for the free
/// kernel, from the per-coordinate Gaussian tails. With `a_i` the in-box
/// sum and `b_i` a bound on the out-of-box sum, the omitted mass is at
/// most `prod (a_i + b_i) - prod a_i`.
fn winding_tail(x: &[f64], y: &[f64], periods: &[f64], t: f64, w: i64, policy: &TruncationPolicy) -> Result<f64> {
    let mut inside = 1.0;
    let mut full = 1.0;
    for ((xi, yi), l) in x.iter().zip(y).zip(periods) {
        let d = yi - xi;
        let a: f64 = (-w..=w).map(|k| crate::heat_kernel::gaussian_1d(d + k as f64 * l, t)).sum();
        // the nearest omitted image on each side is at distance >= (W+1)L - |d|;
        // later ones are further by multiples of L
        let r0 = (w + 1) as f64 * l - d.abs();
        if r0 <= 0.0 {
            return Err(Error::param("windings", "box does not contain the nearest images"));
        }
        let ratio = (-r0 * l / (2.0 * t)).exp();
        let b = 2.0 * crate::heat_kernel::gaussian_1d(r0, t) / (1.0 - ratio);
        inside *= a;
        full *= a + b;
    }
    Ok((full - inside).max(0.0) + policy.tail_tolerance)
}

/// The model on which a spectral oracle can be built for `k`.
pub fn oracle_domain(k: &TransitionKernel) -> Option<&ManifoldModel> {
    match k.model().base() {
        m @ (ManifoldModel::Circle { .. } | ManifoldModel::DirichletInterval { .. }) => Some(m),
        _ => None,
    }
}
