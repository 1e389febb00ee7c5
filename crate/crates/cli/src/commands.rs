use pathkernel::diagnostics::{
    completeness_check, covering_marginal_check, dyadic_ensemble, expected_distance_curve, holder_exponent,
};
use pathkernel::ensemble::map_samples;
use pathkernel::feynman_kac::{
    fk_covering_sum_check, fk_expectation, fk_kernel, fk_monotonicity_check, oracle_domain, spectral_oracle,
    CoveringSumConfig, FkTarget,
};
use pathkernel::heat_kernel::{
    chapman_kolmogorov_residual, delta_family_check, moment_check, MomentCheckConfig, MomentMode,
};
use pathkernel::io::{fk_record, write_curve_csv, write_path_csv, write_paths_csv, JsonObject};
use pathkernel::path_sampler::{sample_bridge, sample_path};
use pathkernel::quadrature::Quadrature;
use pathkernel::{
    CoveringDescriptor, FKProblem, ManifoldModel, Path, Point, RngContract, TimeGrid, TransitionKernel,
    TruncationPolicy, Workers,
};

use crate::args::*;
use crate::Failure;

/// Residual below which a Chapman-Kolmogorov check passes.
const CK_TOLERANCE: f64 = 1e-9;
/// Significance level of the covering chi-square tests.
const CHI_SQUARE_LEVEL: f64 = 0.01;

type Outcome = Result<String, Failure>;

pub fn execute(cli: &Cli) -> Outcome {
    let ctx = Ctx {
        seed: cli.seed,
        workers: Workers(cli.workers),
    };
    match &cli.command {
        Command::Kernel(c) => ctx.kernel(c),
        Command::Mass(c) => ctx.mass(c),
        Command::Verify { check } => match check {
            VerifyCmd::ChapmanKolmogorov(c) => ctx.chapman_kolmogorov(c),
            VerifyCmd::Moments(c) => ctx.moments(c),
            VerifyCmd::Covering(c) => ctx.covering(c),
            VerifyCmd::DeltaFamily(c) => ctx.delta_family(c),
        },
        Command::Sample(c) => ctx.sample(c),
        Command::Bridge(c) => ctx.bridge(c),
        Command::Fk { op } => match op {
            FkCmd::Expectation(c) => ctx.fk_expectation(c),
            FkCmd::Kernel(c) => ctx.fk_kernel(c),
            FkCmd::Monotonicity(c) => ctx.fk_monotonicity(c),
            FkCmd::CoveringSum(c) => ctx.fk_covering_sum(c),
        },
        Command::Curve(c) => ctx.curve(c),
        Command::Holder(c) => ctx.holder(c),
    }
}

struct Ctx {
    seed: u64,
    workers: Workers,
}

fn line(o: JsonObject) -> Outcome {
    Ok(format!("{}\n", o.render()))
}

fn build_kernel(o: &KernelOpts) -> Result<TransitionKernel, Failure> {
    let k = match (&o.model, o.kernel) {
        (ModelArg::Cauchy, _) => TransitionKernel::cauchy(),
        (ModelArg::Manifold(m), KindArg::Cauchy) => TransitionKernel::new(m.clone(), pathkernel::KernelKind::Cauchy)?,
        (ModelArg::Manifold(m), KindArg::Heat) => TransitionKernel::heat(m.clone())?,
    };
    Ok(k.with_truncation(TruncationPolicy::new(o.tail_tol, o.max_terms)?)
        .with_quadrature(Quadrature::with_tolerance(o.quad_tol)))
}

fn manifold(m: &ModelArg) -> Result<&ManifoldModel, Failure> {
    match m {
        ModelArg::Manifold(m) => Ok(m),
        ModelArg::Cauchy => Err(Failure::Usage("--model cauchy is not a manifold here".into())),
    }
}

fn point(p: &Option<PointArg>, model: &ManifoldModel) -> Point {
    p.as_ref().map_or_else(|| model.origin(), |p| p.resolve(model.base()))
}

fn covering(m: &ModelArg) -> Result<CoveringDescriptor, Failure> {
    Ok(CoveringDescriptor::new(manifold(m)?.clone())?)
}

fn csv(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Outcome {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    Ok(String::from_utf8(buf).expect("CSV is ASCII"))
}

fn paths_csv(paths: &[Path]) -> Outcome {
    match paths {
        [p] => csv(|w| write_path_csv(w, p)),
        _ => csv(|w| write_paths_csv(w, paths)),
    }
}

fn spatial(p: &Point, flag: &str) -> Result<f64, Failure> {
    match p.coords() {
        [x] => Ok(*x),
        _ => Err(Failure::Usage(format!("--{flag} must be a single coordinate for the spectral oracle"))),
    }
}

impl Ctx {
    fn kernel(&self, c: &KernelCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let (x, y) = (point(&c.x, k.model()), point(&c.y, k.model()));
        line(JsonObject::new().real("value", k.eval_any(c.t, &x, &y)?))
    }

    fn mass(&self, c: &MassCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let x = point(&c.x, k.model());
        let r = completeness_check(&k, &[c.t], &x)?;
        let e = &r.entries[0];
        line(
            JsonObject::new()
                .real("t", e.t)
                .real("mass", e.mass)
                .real("deficit", e.deficit)
                .bool("complete", r.complete),
        )
    }

    fn chapman_kolmogorov(&self, c: &CkCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let (x, z) = (point(&c.x, k.model()), point(&c.z, k.model()));
        let r = chapman_kolmogorov_residual(&k, c.s, c.t, &x, &z)?;
        line(
            JsonObject::new()
                .real("residual", r)
                .real("tolerance", CK_TOLERANCE)
                .bool("passed", r < CK_TOLERANCE),
        )
    }

    fn moments(&self, c: &MomentsCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let mode = match c.mode {
            MomentModeArg::Integrated => MomentMode::Integrated,
            MomentModeArg::Pointwise => MomentMode::Pointwise,
        };
        let mut cfg = MomentCheckConfig::new(c.a, c.b, mode).with_taus(c.taus.0.clone());
        cfg.epsilon = c.epsilon;
        let r = moment_check(&k, &cfg)?;
        line(
            JsonObject::new()
                .reals("taus", &r.taus)
                .reals("ratios", &r.ratios)
                .real("worst_constant", r.worst_constant)
                .real("spread", r.spread),
        )
    }

    fn covering(&self, c: &CoveringCmd) -> Outcome {
        let cov = covering(&c.model)?;
        let x0 = point(&c.x0, cov.base());
        let grid = TimeGrid::uniform(c.t, c.steps)?;
        let tests = covering_marginal_check(&cov, &x0, &grid, c.samples, c.bins, self.seed, self.workers)?;
        let rows = tests
            .iter()
            .enumerate()
            .map(|(i, t)| {
                JsonObject::new()
                    .int("coordinate", i as u64)
                    .real("statistic", t.statistic)
                    .int("dof", t.dof as u64)
                    .real("p_value", t.p_value)
                    .bool("passed", t.p_value > CHI_SQUARE_LEVEL)
            })
            .collect();
        line(JsonObject::new().real("level", CHI_SQUARE_LEVEL).objects("tests", rows))
    }

    fn delta_family(&self, c: &DeltaCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let y = point(&c.y, k.model());
        let pts = delta_family_check(&k, &y, &c.ts.0)?;
        let rows = pts
            .iter()
            .map(|p| {
                JsonObject::new()
                    .real("t", p.t)
                    .real("smoothed", p.smoothed)
                    .real("target", p.target)
                    .real("error", p.error)
            })
            .collect();
        line(JsonObject::new().objects("points", rows))
    }

    fn sample(&self, c: &SampleCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let x0 = point(&c.x0, k.model());
        let grid = TimeGrid::uniform(c.t, c.steps)?;
        let paths = map_samples(c.paths, self.workers, |i| {
            sample_path(&k, &x0, &grid, &RngContract::new(self.seed, i))
        })?;
        paths_csv(&paths)
    }

    fn bridge(&self, c: &BridgeCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let x0 = point(&c.x0, k.model());
        let y0 = point(&c.y0, k.model());
        let grid = TimeGrid::uniform(c.t, c.steps)?;
        let paths = map_samples(c.paths, self.workers, |i| {
            sample_bridge(&k, &x0, &y0, &grid, &RngContract::new(self.seed, i))
        })?;
        paths_csv(&paths)
    }

    fn fk_problem(&self, o: &FkOpts) -> Result<FKProblem, Failure> {
        let k = build_kernel(&o.kernel)?;
        let x0 = point(&o.x0, k.model());
        Ok(FKProblem::new(k, o.potential.build(), x0, o.t)
            .with_steps(o.steps)
            .with_samples(o.samples)
            .with_seed(self.seed)
            .with_rule(o.rule.into())
            .with_workers(self.workers))
    }

    fn fk_expectation(&self, c: &FkExpectationCmd) -> Outcome {
        let p = self.fk_problem(&c.fk)?.with_terminal(c.terminal.build());
        let est = fk_expectation(&p)?;
        let oracle = match c.oracle_grid {
            Some(m) => {
                let domain = oracle_domain(&p.kernel)
                    .ok_or_else(|| Failure::Usage("--oracle-grid needs a circle or dirichlet model".into()))?;
                let x0 = spatial(&p.x0, "x0")?;
                let s = spectral_oracle(domain, m, &p.potential, p.t)?;
                Some(s.value_at(|x| p.terminal.eval(&Point::scalar(x)), x0))
            }
            None => None,
        };
        line(fk_record(&est, p.n_steps, oracle))
    }

    fn fk_kernel(&self, c: &FkKernelCmd) -> Outcome {
        let p = self.fk_problem(&c.fk)?;
        let y0 = c.y0.resolve(p.kernel.model().base());
        let est = fk_kernel(&p, &y0)?;
        let oracle = match c.oracle_grid {
            Some(m) => {
                let domain = oracle_domain(&p.kernel)
                    .ok_or_else(|| Failure::Usage("--oracle-grid needs a circle or dirichlet model".into()))?;
                let s = spectral_oracle(domain, m, &p.potential, p.t)?;
                Some(s.kernel_at(spatial(&p.x0, "x0")?, spatial(&y0, "y0")?))
            }
            None => None,
        };
        line(fk_record(&est, p.n_steps, oracle))
    }

    fn fk_monotonicity(&self, c: &FkMonotonicityCmd) -> Outcome {
        let p = self.fk_problem(&c.fk)?;
        let v2 = match &c.potential2 {
            Some(v) => v.build(),
            None => p.potential.shifted(c.shift),
        };
        let target = match &c.y0 {
            Some(y) => FkTarget::Kernel(y.resolve(p.kernel.model().base())),
            None => FkTarget::Expectation,
        };
        let r = fk_monotonicity_check(&p, &v2, &target)?;
        line(
            JsonObject::new()
                .object("first", fk_record(&r.first, p.n_steps, None))
                .object("second", fk_record(&r.second, p.n_steps, None))
                .int("violations", r.violations.len() as u64)
                .int("ordering_checks", r.ordering_checks as u64)
                .bool("passed", r.passed()),
        )
    }

    fn fk_covering_sum(&self, c: &FkCoveringSumCmd) -> Outcome {
        let cov = covering(&c.model)?;
        let x0 = point(&c.x0, cov.base());
        let y0 = point(&c.y0, cov.base());
        let cfg = CoveringSumConfig {
            windings: i64::from(c.windings),
            n_steps: c.steps,
            n_samples: c.samples,
            seed: self.seed,
            rule: c.rule.into(),
            workers: self.workers,
        };
        let r = fk_covering_sum_check(&cov, &c.potential.build(), &x0, &y0, c.t, &cfg)?;
        let lifts = r
            .lifts
            .iter()
            .map(|(k, e)| {
                let o = k
                    .iter()
                    .enumerate()
                    .fold(JsonObject::new(), |o, (i, &ki)| o.int(&format!("k{i}"), ki));
                o.real("value", e.value).real("std_error", e.std_error)
            })
            .collect();
        line(
            JsonObject::new()
                .object("base", fk_record(&r.base, c.steps, None))
                .real("lift_sum", r.lift_sum)
                .real("residual", r.residual)
                .real("combined_std_error", r.combined_std_error)
                .real("tail_bound", r.tail_bound)
                .bool("passed", r.passed())
                .objects("lifts", lifts),
        )
    }

    fn curve(&self, c: &CurveCmd) -> Outcome {
        let model = manifold(&c.model)?;
        let x0 = point(&c.x0, model);
        let curve = expected_distance_curve(model, &x0, &c.t_grid.0, c.samples, self.seed, self.workers)?;
        csv(|w| write_curve_csv(w, &curve))
    }

    fn holder(&self, c: &HolderCmd) -> Outcome {
        let k = build_kernel(&c.kernel)?;
        let x0 = point(&c.x0, k.model());
        let LevelRange(first, last) = c.levels;
        let paths = dyadic_ensemble(&k, &x0, c.t, last, c.paths, self.seed, self.workers)?;
        let r = holder_exponent(k.model(), &paths, first..=last)?;
        line(
            JsonObject::new()
                .int("first_level", first)
                .int("last_level", last)
                .reals("scales", &r.scales)
                .reals("max_increments", &r.max_increments)
                .real("fitted_exponent", r.fitted_exponent)
                .real("r_squared", r.r_squared),
        )
    }
}
