use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathkernel::feynman_kac::RiemannRule;
use pathkernel::{ManifoldModel, Point, Potential, Terminal, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "pathkernel", version, about = "Heat kernels, Brownian paths and Feynman-Kac estimates on model manifolds")]
pub struct Cli {
    /// Line-oriented `key = value` file; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for ensembles (overridden by PATHKERNEL_WORKERS).
    #[arg(long, global = true, default_value_t = 1, value_parser = positive_count)]
    pub workers: usize,

    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Write results here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate p_t(x, y).
    Kernel(KernelCmd),
    /// Total mass of p_t(., x).
    Mass(MassCmd),
    /// Numerical checks of the kernel axioms.
    Verify {
        #[command(subcommand)]
        check: VerifyCmd,
    },
    /// Sample grid paths (CSV).
    Sample(SampleCmd),
    /// Sample normalized bridges (CSV).
    Bridge(BridgeCmd),
    /// Feynman-Kac estimators.
    Fk {
        #[command(subcommand)]
        op: FkCmd,
    },
    /// Expected distance curve, closed form against Monte Carlo (CSV).
    Curve(CurveCmd),
    /// Empirical Hölder exponent of sampled paths.
    Holder(HolderCmd),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Residual of int p_t(x, z) p_s(z, y) dz against p_{s+t}(x, y)
    ChapmanKolmogorov(CkCmd),
    /// Moment ratios of the kernel over a range of times
    Moments(MomentsCmd),
    /// Chi-square test of projected line paths against the torus kernel
    Covering(CoveringCmd),
    /// Smoothing error of a bump as t decreases
    DeltaFamily(DeltaCmd),
}

#[derive(Debug, Subcommand)]
pub enum FkCmd {
    /// E[g(w_t) exp(-int V)] over paths from x0
    Expectation(FkExpectationCmd),
    /// Feynman-Kac kernel from x0 to y0 via bridges
    Kernel(FkKernelCmd),
    /// Pathwise ordering of two potentials under common random numbers
    Monotonicity(FkMonotonicityCmd),
    /// Base-space kernel against the sum over lifts of the target
    CoveringSum(FkCoveringSumCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Heat,
    Cauchy,
}

#[derive(Debug, Clone, Args)]
pub struct KernelOpts {
    /// euclidean:N, hyperbolic3, torus:L1,L2,.., circle:L, dirichlet:L,
    /// compactified:<model>, or cauchy.
    #[arg(long, default_value = "euclidean:1")]
    pub model: ModelArg,

    #[arg(long, value_enum, default_value_t = KindArg::Heat)]
    pub kernel: KindArg,

    /// Tail tolerance for lattice and eigen series.
    #[arg(long, default_value_t = 1e-12, value_parser = positive_real)]
    pub tail_tol: f64,

    #[arg(long, default_value_t = 1_000_000, value_parser = positive_count)]
    pub max_terms: usize,

    #[arg(long, default_value_t = 1e-10, value_parser = positive_real)]
    pub quad_tol: f64,
}

#[derive(Debug, Args)]
pub struct KernelCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub t: f64,
    /// Destination point (default: the model origin); `inf` is the cemetery.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<PointArg>,
    /// Source point (default: the model origin).
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<PointArg>,
}

#[derive(Debug, Args)]
pub struct MassCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<PointArg>,
}

#[derive(Debug, Args)]
pub struct CkCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 0.5, value_parser = positive_real)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<PointArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<PointArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentModeArg {
    Integrated,
    Pointwise,
}

#[derive(Debug, Args)]
pub struct MomentsCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 4.0, value_parser = positive_real)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub b: f64,
    #[arg(long, value_enum, default_value_t = MomentModeArg::Integrated)]
    pub mode: MomentModeArg,
    /// Comma-separated tau values, all inside (0, epsilon).
    #[arg(long, default_value = "0.001,0.003,0.01,0.03,0.1")]
    pub taus: RealList,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct CoveringCmd {
    /// Base of the covering: circle:L or torus:L1,L2,..
    #[arg(long, default_value = "circle:1")]
    pub model: ModelArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    #[arg(long, default_value_t = 0.5, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, default_value_t = 1, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 100_000, value_parser = positive_count)]
    pub samples: usize,
    #[arg(long, default_value_t = 64, value_parser = positive_count)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct DeltaCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<PointArg>,
    #[arg(long, default_value = "0.1,0.01,0.001")]
    pub ts: RealList,
}

#[derive(Debug, Args)]
pub struct SampleCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, default_value_t = 16, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 1, value_parser = positive_count)]
    pub paths: usize,
}

#[derive(Debug, Args)]
pub struct BridgeCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<PointArg>,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, default_value_t = 16, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 1, value_parser = positive_count)]
    pub paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Right,
    Trapezoid,
}

impl From<RuleArg> for RiemannRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Right => RiemannRule::RightEndpoint,
            RuleArg::Trapezoid => RiemannRule::Trapezoid,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FkOpts {
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// zero, const:c, cos, step:a,b,v
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    pub potential: PotentialArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, default_value_t = 64, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_count)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = RuleArg::Right)]
    pub rule: RuleArg,
}

#[derive(Debug, Args)]
pub struct FkExpectationCmd {
    #[command(flatten)]
    pub fk: FkOpts,
    /// one, indicator:a,b
    #[arg(long, default_value = "one", allow_hyphen_values = true)]
    pub terminal: TerminalArg,
    /// Also report the spectral oracle on this many grid points
    /// (circle and Dirichlet models).
    #[arg(long, value_parser = positive_count)]
    pub oracle_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FkKernelCmd {
    #[command(flatten)]
    pub fk: FkOpts,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: PointArg,
    #[arg(long, value_parser = positive_count)]
    pub oracle_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FkMonotonicityCmd {
    #[command(flatten)]
    pub fk: FkOpts,
    /// The larger potential; defaults to the first one shifted by --shift.
    #[arg(long, allow_hyphen_values = true)]
    pub potential2: Option<PotentialArg>,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub shift: f64,
    /// Compare kernels q_t(x0, y0) instead of expectations of g = 1.
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<PointArg>,
}

#[derive(Debug, Args)]
pub struct FkCoveringSumCmd {
    /// Base of the covering: circle:L or torus:L1,L2,..
    #[arg(long, default_value = "circle:6.283185307179586")]
    pub model: ModelArg,
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    pub potential: PotentialArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<PointArg>,
    #[arg(long, default_value_t = 0.5, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, default_value_t = 3)]
    pub windings: u32,
    #[arg(long, default_value_t = 64, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_count)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = RuleArg::Right)]
    pub rule: RuleArg,
}

#[derive(Debug, Args)]
pub struct CurveCmd {
    #[arg(long, default_value = "hyperbolic3")]
    pub model: ModelArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    /// start:stop:step, inclusive of stop.
    #[arg(long, default_value = "0.25:7:0.25")]
    pub t_grid: TimeRange,
    #[arg(long, default_value_t = 100_000, value_parser = positive_count)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct HolderCmd {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<PointArg>,
    #[arg(long, default_value_t = 1.0, value_parser = positive_real)]
    pub t: f64,
    #[arg(long, default_value_t = 200, value_parser = positive_count)]
    pub paths: usize,
    /// Dyadic levels as first:last.
    #[arg(long, default_value = "4:12")]
    pub levels: LevelRange,
}

pub fn positive_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

pub fn positive_count(s: &str) -> Result<usize, String> {
    let v: usize = s.trim().parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))?;
    if v > 0 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

fn reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect()
}

/// A manifold model, or the Cauchy process on the line.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelArg {
    Manifold(ManifoldModel),
    Cauchy,
}

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("cauchy") {
            return Ok(ModelArg::Cauchy);
        }
        s.parse().map(ModelArg::Manifold).map_err(|e: pathkernel::Error| e.to_string())
    }
}

/// Comma-separated coordinates or `inf` for the cemetery.
#[derive(Debug, Clone, PartialEq)]
pub enum PointArg {
    Coords(Vec<f64>),
    Cemetery,
}

impl FromStr for PointArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if matches!(s.trim(), "inf" | "cemetery") {
            Ok(PointArg::Cemetery)
        } else {
            reals(s).map(PointArg::Coords)
        }
    }
}

impl PointArg {
    /// H^3 accepts 3 spatial coordinates (lifted to the hyperboloid) or
    /// all 4.
    pub fn resolve(&self, model: &ManifoldModel) -> Point {
        match self {
            PointArg::Cemetery => Point::cemetery(),
            PointArg::Coords(c) if matches!(model, ManifoldModel::Hyperbolic3) && c.len() == 3 => {
                Point::hyperboloid([c[0], c[1], c[2]])
            }
            PointArg::Coords(c) => Point::new(c.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

impl FromStr for RealList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = reals(s)?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(RealList(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeRange(pub Vec<f64>);

impl FromStr for TimeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts[..] else {
            return Err("expected start:stop:step".into());
        };
        let (a, b, h) = (positive_real(a)?, positive_real(b)?, positive_real(h)?);
        if b < a {
            return Err("stop must not precede start".into());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err("too many grid points".into());
        }
        Ok(TimeRange((0..=n).map(|i| a + i as f64 * h).collect()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRange(pub u32, pub u32);

impl FromStr for LevelRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or("expected first:last")?;
        let a: u32 = a.trim().parse().map_err(|_| format!("bad level `{a}`"))?;
        let b: u32 = b.trim().parse().map_err(|_| format!("bad level `{b}`"))?;
        if a > b || b > 24 {
            return Err("levels must satisfy first <= last <= 24".into());
        }
        Ok(LevelRange(a, b))
    }
}

/// Named potentials: `zero`, `const:c`, `cos`, `step:a,b,v`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialArg {
    Zero,
    Const(f64),
    Cos,
    Step(f64, f64, f64),
}

impl FromStr for PotentialArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').map_or((s, None), |(h, r)| (h, Some(r)));
        match (head, rest) {
            ("zero", None) => Ok(PotentialArg::Zero),
            ("cos", None) => Ok(PotentialArg::Cos),
            ("const", Some(r)) => {
                let v: f64 = r.trim().parse().map_err(|_| format!("`{r}` is not a number"))?;
                if !v.is_finite() {
                    return Err("constant must be finite".into());
                }
                Ok(PotentialArg::Const(v))
            }
            ("step", Some(r)) => match reals(r)?[..] {
                [a, b, v] if a < b && v.is_finite() => Ok(PotentialArg::Step(a, b, v)),
                _ => Err("step needs a,b,v with a < b".into()),
            },
            _ => Err(format!("unknown potential `{s}` (zero, const:c, cos, step:a,b,v)")),
        }
    }
}

impl PotentialArg {
    pub fn build(&self) -> Potential {
        match *self {
            PotentialArg::Zero => Potential::zero(),
            PotentialArg::Const(c) => Potential::constant(c).expect("finite constant"),
            PotentialArg::Cos => Potential::cos(),
            PotentialArg::Step(a, b, v) => Potential::step(a, b, v).expect("validated step"),
        }
    }
}

/// Terminal data: `one` or `indicator:a,b`.
#[derive(Debug, Clone, PartialEq)]
pub enum TerminalArg {
    One,
    Indicator(f64, f64),
}

impl FromStr for TerminalArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "one" {
            return Ok(TerminalArg::One);
        }
        match s.strip_prefix("indicator:").map(reals) {
            Some(Ok(v)) if v.len() == 2 && v[0] < v[1] => Ok(TerminalArg::Indicator(v[0], v[1])),
            _ => Err(format!("unknown terminal `{s}` (one, indicator:a,b)")),
        }
    }
}

impl TerminalArg {
    pub fn build(&self) -> Terminal {
        match *self {
            TerminalArg::One => Terminal::one(),
            TerminalArg::Indicator(a, b) => Terminal::indicator(a, b),
        }
    }
}
