//! Acceptance suite: one PASS/FAIL line per criterion, INFO lines carry
//! the measured numbers. Exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use pathkernel::diagnostics::{
    covering_marginal_check, dyadic_ensemble, expected_distance_curve, expected_distance_mc, holder_exponent,
    winding_frequency_check, DEFAULT_HOLDER_LEVELS,
};
use pathkernel::ensemble::map_samples;
use pathkernel::feynman_kac::{
    fk_covering_sum_check, fk_expectation, fk_monotonicity_check, fk_samples, spectral_oracle, CoveringSumConfig,
    FkTarget, RiemannRule,
};
use pathkernel::heat_kernel::{chapman_kolmogorov_residual, moment_check, MomentCheckConfig, MomentMode};
use pathkernel::path_sampler::{lift_path, project_path, sample_path};
use pathkernel::{
    CoveringDescriptor, Error, FKProblem, ManifoldModel, Path, Point, Potential, RngContract, TimeGrid,
    TransitionKernel, Workers, DEFAULT_SEED,
};
use rand::Rng;

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn check(&mut self, id: &str, pass: bool, what: &str) {
        println!("[{}] {id} {what}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }

    fn info(&self, id: &str, what: &str) {
        println!("[INFO] {id} {what}");
    }
}

fn workers() -> Workers {
    Workers(std::thread::available_parallelism().map_or(4, |n| n.get()).max(4))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn euclidean_distance(s: &mut Suite) {
    let model = ManifoldModel::euclidean(3).unwrap();
    let t0 = Instant::now();
    let e = expected_distance_mc(&model, &model.origin(), 1.0, 1_000_000, DEFAULT_SEED, Workers(1)).unwrap();
    let reference = 2.256758;
    s.check(
        "1",
        rel(e.value, reference) < 0.005 && e.within_sigmas(reference, 3.0),
        &format!(
            "R^3 E rho at t=1: {:.6} +- {:.2e} vs {reference} (rel {:.2e}, z {:.2}, {:.1?} single-threaded)",
            e.value,
            e.std_error,
            rel(e.value, reference),
            e.z_score(reference),
            t0.elapsed()
        ),
    );
}

fn hyperbolic_distance(s: &mut Suite) {
    let h3 = ManifoldModel::Hyperbolic3;
    let reference = (-1.0f64).exp() * 2.0 / PI.sqrt() + 3.0 * libm::erf(1.0);
    let e = expected_distance_mc(&h3, &h3.origin(), 1.0, 1_000_000, DEFAULT_SEED, workers()).unwrap();
    s.check(
        "2a",
        rel(e.value, reference) < 0.005 && e.within_sigmas(reference, 3.0),
        &format!(
            "H^3 E rho at t=1: {:.6} +- {:.2e} vs {reference:.6} (rel {:.2e}, z {:.2})",
            e.value,
            e.std_error,
            rel(e.value, reference),
            e.z_score(reference)
        ),
    );

    let ts: Vec<f64> = (1..=28).map(|i| 0.25 * i as f64).collect();
    let r3 = ManifoldModel::euclidean(3).unwrap();
    let hc = expected_distance_curve(&h3, &h3.origin(), &ts, 100_000, 7, workers()).unwrap();
    let ec = expected_distance_curve(&r3, &r3.origin(), &ts, 100_000, 8, workers()).unwrap();
    let mut worst_gap = f64::INFINITY;
    let mut dominated = true;
    for (h, e) in hc.iter().zip(&ec).filter(|(h, _)| h.t >= 0.5) {
        let (ha, ea) = (h.analytic.unwrap(), e.analytic.unwrap());
        dominated &= ha > ea && h.mc.value > e.mc.value;
        worst_gap = worst_gap.min(h.mc.value - e.mc.value);
    }
    s.check(
        "2b",
        dominated,
        &format!("H^3 curve above R^3 curve on t in [0.5, 7] (analytic and MC); smallest MC gap {worst_gap:.4}"),
    );
}

fn axioms(s: &mut Suite) {
    let mut rng = RngContract::new(DEFAULT_SEED, 3).stream();
    let h3 = ManifoldModel::Hyperbolic3;
    let kernels = [
        ("gaussian", TransitionKernel::heat(ManifoldModel::euclidean(1).unwrap()).unwrap()),
        ("circle", TransitionKernel::heat(ManifoldModel::circle(1.0).unwrap()).unwrap()),
        ("hyperbolic3", TransitionKernel::heat(h3.clone()).unwrap()),
        ("cauchy", TransitionKernel::cauchy()),
    ];
    let point = |name: &str, rng: &mut rand_chacha::ChaCha8Rng| -> Point {
        match name {
            "circle" => Point::scalar(rng.random::<f64>()),
            "hyperbolic3" => Point::hyperboloid([0; 3].map(|_| rng.random_range(-1.0..1.0))),
            _ => Point::scalar(rng.random_range(-3.0..3.0)),
        }
    };
    for (name, k) in &kernels {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let (a, b) = (rng.random_range(0.05..2.0), rng.random_range(0.05..2.0));
            let (x, z) = (point(name, &mut rng), point(name, &mut rng));
            worst = worst.max(chapman_kolmogorov_residual(k, a, b, &x, &z).unwrap());
        }
        s.check("3", worst < 1e-9, &format!("{name}: Chapman-Kolmogorov worst residual {worst:.2e} over 20 tuples"));

        let mut asym = 0.0f64;
        let mut min = f64::INFINITY;
        for _ in 0..10_000 {
            let t = rng.random_range(0.05..2.0);
            let (x, y) = (point(name, &mut rng), point(name, &mut rng));
            let (p, q) = (k.eval(t, &x, &y).unwrap(), k.eval(t, &y, &x).unwrap());
            asym = asym.max(rel(p, q));
            min = min.min(p.min(q));
        }
        s.check(
            "3",
            asym <= 1e-12 && min > 0.0,
            &format!("{name}: 1e4 evaluations, worst relative asymmetry {asym:.1e}, smallest value {min:.2e}"),
        );
    }
}

fn moments(s: &mut Suite) {
    let e1 = TransitionKernel::heat(ManifoldModel::euclidean(1).unwrap()).unwrap();
    let r = moment_check(&e1, &MomentCheckConfig::new(4.0, 1.0, MomentMode::Integrated)).unwrap();
    let worst = r.ratios.iter().map(|x| (x - 12.0).abs()).fold(0.0, f64::max);
    s.check("4a", worst <= 1e-6, &format!("integrated ratios {:?}, worst |ratio - 12| {worst:.1e}", r.ratios));

    let r = moment_check(&e1, &MomentCheckConfig::pointwise_for_dim(1.0, 1)).unwrap();
    s.check(
        "4b",
        r.spread - 1.0 <= 1e-8,
        &format!("pointwise a = 2b+n+2 = 5: ratios {:?}, spread - 1 = {:.1e}", r.ratios, r.spread - 1.0),
    );

    let c = moment_check(&TransitionKernel::cauchy(), &MomentCheckConfig::new(4.0, 1.0, MomentMode::Integrated));
    s.check(
        "4c",
        matches!(c, Err(Error::Divergent(_))),
        &format!("Cauchy integrated check reports {}", c.map_or_else(|e| e.kind().to_string(), |_| "a value".into())),
    );
}

fn coverings(s: &mut Suite) {
    let cov = CoveringDescriptor::new(ManifoldModel::circle(1.0).unwrap()).unwrap();
    let grid = TimeGrid::uniform(0.5, 8).unwrap();
    let tests = covering_marginal_check(&cov, &Point::scalar(0.3), &grid, 100_000, 64, DEFAULT_SEED, workers()).unwrap();
    let t = &tests[0];
    s.check(
        "5a",
        t.p_value > 0.01,
        &format!("projected marginal vs theta kernel: chi2 {:.2} on {} dof, p {:.3}", t.statistic, t.dof, t.p_value),
    );

    // lift o project on line paths, project o lift on circle paths
    let line = TransitionKernel::heat(cov.total().clone()).unwrap();
    let circle = TransitionKernel::heat(cov.base().clone()).unwrap();
    let grid = TimeGrid::uniform(0.25, 64).unwrap();
    let close = |a: &Path, b: &Path| {
        a.points().iter().zip(b.points()).all(|(p, q)| {
            let (x, y) = (p.coords()[0], q.coords()[0]);
            (x - y).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0)
        })
    };
    let mut bad = 0usize;
    let mut bit_exact = 0usize;
    for i in 0..1000 {
        let tilde = sample_path(&line, &Point::scalar(0.3), &grid, &RngContract::new(5, i)).unwrap();
        let up = lift_path(&cov, &project_path(&cov, &tilde).unwrap(), tilde.start()).unwrap();
        bad += usize::from(!close(&up, &tilde));
        bit_exact += usize::from(up == tilde);
        let base = sample_path(&circle, &Point::scalar(0.3), &grid, &RngContract::new(6, i)).unwrap();
        let down = project_path(&cov, &lift_path(&cov, &base, &Point::scalar(-2.7)).unwrap()).unwrap();
        bad += usize::from(!close(&down, &base));
    }
    s.check(
        "5b",
        bad == 0,
        &format!("round trips on 1000 + 1000 paths: {bad} mismatches beyond 4 ulp of the period ({bit_exact}/1000 lift o project bit-exact)"),
    );

    let classes =
        winding_frequency_check(1.0, 0.1, 0.6, &TimeGrid::uniform(0.5, 4).unwrap(), 100_000, DEFAULT_SEED, workers())
            .unwrap();
    let worst = classes.iter().map(|c| c.z).fold(0.0, f64::max);
    let shown: Vec<String> = classes
        .iter()
        .filter(|c| c.expected >= 1.0)
        .map(|c| format!("k={}: {}/{:.0}", c.winding, c.observed, c.expected))
        .collect();
    s.check("5c", worst <= 3.0, &format!("bridge windings {}; worst z {worst:.2}", shown.join(", ")));
}

fn feynman_kac_oracle(s: &mut Suite) {
    let model = ManifoldModel::circle(2.0 * PI).unwrap();
    let oracle = spectral_oracle(&model, 512, &Potential::cos(), 1.0).unwrap().row_sum(0);
    let k = TransitionKernel::heat(model).unwrap();
    let run = |n: usize, rule: RiemannRule| {
        let p = FKProblem::new(k.clone(), Potential::cos(), Point::scalar(0.0), 1.0)
            .with_steps(n)
            .with_samples(200_000)
            .with_seed(42)
            .with_rule(rule)
            .with_workers(workers());
        fk_expectation(&p).unwrap()
    };
    let t0 = Instant::now();
    let e = run(64, RiemannRule::RightEndpoint);
    let elapsed = t0.elapsed();
    s.check(
        "6a",
        rel(e.value, oracle) < 0.02,
        &format!("n=64: {:.6} +- {:.2e} vs oracle {oracle:.6} (rel {:.2e}, {elapsed:.1?})", e.value, e.std_error, rel(e.value, oracle)),
    );
    s.check("6b", e.within_sigmas(oracle, 3.0), &format!("n=64 within 3 std_error: z {:.2}", e.z_score(oracle)));

    let mut runs = Vec::new();
    for n in [4, 16, 64, 256] {
        let e = if n == 64 { e } else { run(n, RiemannRule::RightEndpoint) };
        runs.push((n, e));
    }
    let monotone = runs.windows(2).all(|w| {
        let (a, b) = (w[0].1, w[1].1);
        (b.value - oracle).abs() <= (a.value - oracle).abs() + 3.0 * a.std_error.hypot(b.std_error)
    });
    let biases: Vec<String> = runs
        .iter()
        .map(|(n, e)| format!("n={n}: {:+.5} (z {:.1})", e.value - oracle, e.z_score(oracle)))
        .collect();
    s.check("6c", monotone, &format!("bias shrinks with n: {}", biases.join(", ")));

    let tr = run(64, RiemannRule::Trapezoid);
    s.info(
        "6",
        &format!(
            "trapezoid rule at n=64: {:.6} +- {:.2e}, z {:.2} (the right-endpoint miss at 3 sigma is O(1/n) slicing bias)",
            tr.value,
            tr.std_error,
            tr.z_score(oracle)
        ),
    );
}

fn feynman_kac_structure(s: &mut Suite) {
    let circle = ManifoldModel::circle(2.0 * PI).unwrap();
    let k = TransitionKernel::heat(circle.clone()).unwrap();
    let p = FKProblem::new(k.clone(), Potential::cos(), Point::scalar(0.0), 1.0)
        .with_samples(10_000)
        .with_workers(workers());
    let v2 = Potential::cos().shifted(0.5);
    for (label, target) in [("expectation", FkTarget::Expectation), ("kernel at pi", FkTarget::Kernel(Point::scalar(PI)))] {
        let r = fk_monotonicity_check(&p, &v2, &target).unwrap();
        s.check(
            "7a",
            r.passed(),
            &format!(
                "CRN {label}: {} pathwise violations over 1e4 paths, {} ordering checks; {:.5} >= {:.5}",
                r.violations.len(),
                r.ordering_checks,
                r.first.value,
                r.second.value
            ),
        );
    }

    let cov = CoveringDescriptor::new(circle).unwrap();
    let cfg = CoveringSumConfig {
        windings: 3,
        n_steps: 64,
        n_samples: 20_000,
        seed: DEFAULT_SEED,
        rule: RiemannRule::RightEndpoint,
        workers: workers(),
    };
    let r = fk_covering_sum_check(&cov, &Potential::cos(), &Point::scalar(0.0), &Point::scalar(1.0), 0.5, &cfg).unwrap();
    s.check(
        "7b",
        r.passed(),
        &format!(
            "covering sum W=3, t=0.5: base {:.6} vs sum over lifts {:.6}, residual {:.2e} <= 3*{:.2e} + {:.1e}",
            r.base.value, r.lift_sum, r.residual, r.combined_std_error, r.tail_bound
        ),
    );

    let mut worst = 0.0f64;
    for (model, c) in [
        (ManifoldModel::euclidean(1).unwrap(), 0.7),
        (ManifoldModel::Hyperbolic3, -1.3),
        (ManifoldModel::circle(1.0).unwrap(), 2.5),
    ] {
        let exact = (-c * 1.0f64).exp();
        let p = FKProblem::new(
            TransitionKernel::heat(model.clone()).unwrap(),
            Potential::constant(c).unwrap(),
            model.origin(),
            1.0,
        )
        .with_samples(1000);
        worst = fk_samples(&p).unwrap().iter().map(|x| rel(*x, exact)).fold(worst, f64::max);
    }
    s.check("7c", worst <= 1e-15, &format!("V = c gives exp(-ct) per sample: worst relative error {worst:.1e}"));
}

fn killing(s: &mut Suite) {
    let base = ManifoldModel::dirichlet_interval(PI).unwrap();
    let k = TransitionKernel::heat(ManifoldModel::compactified(base.clone()).unwrap()).unwrap();
    let grid = TimeGrid::uniform(1.0, 16).unwrap();
    let n = 100_000;
    let x0 = Point::scalar(PI / 2.0);
    let alive = map_samples(n, workers(), |i| Ok(!sample_path(&k, &x0, &grid, &RngContract::new(DEFAULT_SEED, i))?.is_killed()))
        .unwrap()
        .into_iter()
        .filter(|&a| a)
        .count();
    // sine series of the Dirichlet heat kernel integrated over (0, pi)
    let oracle: f64 = (0..50)
        .map(|j| {
            let m = (2 * j + 1) as f64;
            4.0 / (PI * m) * (m * PI / 2.0).sin() * (-m * m).exp()
        })
        .sum();
    let frac = alive as f64 / n as f64;
    let sd = (oracle * (1.0 - oracle) / n as f64).sqrt();
    s.check(
        "8a",
        (frac - oracle).abs() <= 3.0 * sd,
        &format!("survival on (0, pi) from pi/2 at t=1: {frac:.5} vs {oracle:.5} (z {:.2})", (frac - oracle).abs() / sd),
    );

    let mut worst = 0.0f64;
    for t in [0.01, 0.1, 1.0, 5.0] {
        for x in [Point::scalar(0.1), Point::scalar(PI / 2.0), Point::scalar(3.0), Point::cemetery()] {
            worst = worst.max((k.total_mass(t, &x).unwrap() - 1.0).abs());
        }
    }
    s.check("8b", worst == 0.0, &format!("compactified total mass: worst |mass - 1| = {worst:.1e} over 16 (t, x)"));
}

fn regularity(s: &mut Suite) {
    let bm = TransitionKernel::heat(ManifoldModel::euclidean(1).unwrap()).unwrap();
    let x0 = Point::scalar(0.0);
    let fit = |k: &TransitionKernel, seed: u64| {
        let paths = dyadic_ensemble(k, &x0, 1.0, 12, 200, seed, workers()).unwrap();
        holder_exponent(k.model(), &paths, DEFAULT_HOLDER_LEVELS).unwrap()
    };
    let r = fit(&bm, DEFAULT_SEED);
    s.check(
        "9a",
        (0.40..=0.50).contains(&r.fitted_exponent) && r.r_squared > 0.98,
        &format!("Brownian fit {:.4}, r^2 {:.5} (band [0.40, 0.50], r^2 > 0.98)", r.fitted_exponent, r.r_squared),
    );
    let fits: Vec<(f64, f64)> = (0..50).map(|seed| fit(&bm, seed)).map(|r| (r.fitted_exponent, r.r_squared)).collect();
    let (lo, hi) = fits.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), f| (lo.min(f.0), hi.max(f.0)));
    let mean = fits.iter().map(|f| f.0).sum::<f64>() / 50.0;
    let r2 = fits.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let inside = fits.iter().filter(|f| (0.40..=0.50).contains(&f.0)).count();
    s.info(
        "9",
        &format!(
            "50-seed calibration (200 paths, levels 4..12): mean {mean:.4}, range [{lo:.4}, {hi:.4}], min r^2 {r2:.5}, {inside}/50 inside the band; the max-increment modulus carries a sqrt(log) factor that pulls finite-level fits below 1/2"
        ),
    );

    let grid = TimeGrid::uniform(1.0, 1 << 12).unwrap();
    let line = Path::new(grid.clone(), grid.times().iter().map(|&t| Point::scalar(3.0 * t)).collect()).unwrap();
    let lin = holder_exponent(bm.model(), &[line], DEFAULT_HOLDER_LEVELS).unwrap();
    s.check("9b", (lin.fitted_exponent - 1.0).abs() < 1e-9, &format!("linear path fit {:.12}", lin.fitted_exponent));

    let c = fit(&TransitionKernel::cauchy(), DEFAULT_SEED);
    s.check("9c", c.fitted_exponent < 0.1, &format!("Cauchy fit {:.4} (r^2 {:.3})", c.fitted_exponent, c.r_squared));
}

fn determinism(s: &mut Suite) {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["sample", "--model", "hyperbolic3", "--steps", "16", "--paths", "200"],
        &["bridge", "--model", "torus:1,2", "--x0", "0.1,0.2", "--y0", "0.7,1.9", "--paths", "200"],
        &["curve", "--t-grid", "0.5:3:0.5", "--samples", "20000"],
        &["fk", "expectation", "--model", "circle:6.283185307179586", "--potential", "cos", "--samples", "20000"],
        &["fk", "expectation", "--model", "compactified:dirichlet:3", "--x0", "1", "--potential", "step:0,1,2"],
        &["fk", "kernel", "--model", "hyperbolic3", "--y0", "0.3,0.2,0.1", "--potential", "cos", "--samples", "2000"],
        &["holder", "--paths", "50"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = ["1", "2", "4", "1"]
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let out = dir.path().join(format!("run{i}_{j}"));
                let st = Command::new(env!("CARGO_BIN_EXE_pathkernel"))
                    .args(*args)
                    .args(["--seed", "20240601", "--workers", w, "--output", out.to_str().unwrap()])
                    .env_remove("PATHKERNEL_WORKERS")
                    .status()
                    .unwrap();
                assert!(st.success(), "{args:?}");
                std::fs::read(out).unwrap()
            })
            .collect();
        identical += usize::from(outputs.windows(2).all(|w| w[0] == w[1]));
    }
    s.check(
        "10",
        identical == runs.len(),
        &format!("{identical}/{} commands byte-identical across --workers 1, 2, 4 and a repeat", runs.len()),
    );
}

fn main() {
    let mut s = Suite { failed: Vec::new() };
    let start = Instant::now();
    let criteria: [(&str, fn(&mut Suite)); 10] = [
        ("expected distance in R^3", euclidean_distance),
        ("expected distance in H^3", hyperbolic_distance),
        ("transition-function axioms", axioms),
        ("moment conditions", moments),
        ("covering identity", coverings),
        ("Feynman-Kac against the spectral oracle", feynman_kac_oracle),
        ("Feynman-Kac structure", feynman_kac_structure),
        ("killing and compactification", killing),
        ("path regularity", regularity),
        ("determinism", determinism),
    ];
    for (i, (title, run)) in criteria.iter().enumerate() {
        println!("== criterion {}: {title}", i + 1);
        run(&mut s);
    }
    println!("== {:.1?} total", start.elapsed());
    if s.failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed: {}", s.failed.join(", "));
        std::process::exit(1);
    }
}
