use std::f64::consts::PI;

use proptest::prelude::*;

use pathkernel::diagnostics::{euclidean_distance_coefficient, expected_distance_analytic};
use pathkernel::path_sampler::{lift_path, project_path, sample_bridge, sample_path};
use pathkernel::{CoveringDescriptor, ManifoldModel, Point, RngContract, TimeGrid, TransitionKernel};

fn heat(model: ManifoldModel) -> TransitionKernel {
    TransitionKernel::heat(model).unwrap()
}

fn h3(v: [f64; 3]) -> Point {
    Point::hyperboloid(v)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-300
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernels_are_symmetric_and_positive(
        t in 0.01f64..5.0,
        x in prop::array::uniform3(-1.5f64..1.5),
        y in prop::array::uniform3(-1.5f64..1.5),
    ) {
        let cases = [
            (heat(ManifoldModel::euclidean(3).unwrap()), Point::new(x.to_vec()), Point::new(y.to_vec())),
            (heat(ManifoldModel::hyperbolic3()), h3(x), h3(y)),
            (
                heat(ManifoldModel::flat_torus(vec![1.0, 2.0, 3.0]).unwrap()),
                Point::new(x.iter().zip([1.0, 2.0, 3.0]).map(|(c, l)| c.rem_euclid(l)).collect()),
                Point::new(y.iter().zip([1.0, 2.0, 3.0]).map(|(c, l)| c.rem_euclid(l)).collect()),
            ),
        ];
        for (k, a, b) in cases {
            let (ab, ba) = (k.eval(t, &a, &b).unwrap(), k.eval(t, &b, &a).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert!(close(ab, ba, 1e-12), "{:?}: {} vs {}", k.model(), ab, ba);
        }
    }

    #[test]
    fn hyperbolic_kernel_depends_only_on_distance(
        t in 0.05f64..3.0,
        x in prop::array::uniform3(-1.0f64..1.0),
        y in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let model = ManifoldModel::hyperbolic3();
        let k = heat(model.clone());
        let (a, b) = (h3(x), h3(y));
        let r = model.distance(&a, &b).unwrap();
        let at_origin = k.eval(t, &model.exp_point(&model.origin(), [0.0, 0.0, 1.0], r).unwrap(), &model.origin()).unwrap();
        prop_assert!(close(k.eval(t, &a, &b).unwrap(), at_origin, 1e-9));
    }

    #[test]
    fn circle_kernel_is_a_sum_of_gaussian_images(t in 0.01f64..2.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let k = heat(ManifoldModel::circle(1.0).unwrap());
        let images: f64 = (-40..=40)
            .map(|j| {
                let d = x - y + j as f64;
                (4.0 * PI * t).powf(-0.5) * (-d * d / (4.0 * t)).exp()
            })
            .sum();
        prop_assert!(close(k.eval(t, &Point::scalar(x), &Point::scalar(y)).unwrap(), images, 1e-10));
    }

    #[test]
    fn dirichlet_kernel_is_below_the_free_kernel(t in 0.01f64..3.0, x in 0.01f64..3.1, y in 0.01f64..3.1) {
        let d = heat(ManifoldModel::dirichlet_interval(PI).unwrap());
        let free = heat(ManifoldModel::euclidean(1).unwrap());
        let (a, b) = (Point::scalar(x), Point::scalar(y));
        let pd = d.eval(t, &a, &b).unwrap();
        prop_assert!(pd >= -1e-15);
        prop_assert!(pd <= free.eval(t, &a, &b).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn compactification_conserves_mass(t in 0.01f64..5.0, x in 0.01f64..0.99) {
        let k = heat(ManifoldModel::compactified(ManifoldModel::dirichlet_interval(1.0).unwrap()).unwrap());
        prop_assert!(close(k.total_mass(t, &Point::scalar(x)).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn distances_are_metrics(
        x in prop::array::uniform3(-2.0f64..2.0),
        y in prop::array::uniform3(-2.0f64..2.0),
        z in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let m = ManifoldModel::hyperbolic3();
        let (a, b, c) = (h3(x), h3(y), h3(z));
        let d = |p: &Point, q: &Point| m.distance(p, q).unwrap();
        prop_assert!(d(&a, &a) < 1e-7);
        prop_assert!(close(d(&a, &b), d(&b, &a), 1e-12));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
    }

    #[test]
    fn lifting_inverts_projection(x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let cov = CoveringDescriptor::new(ManifoldModel::flat_torus(vec![1.0, 0.5]).unwrap()).unwrap();
        let up = Point::new(vec![x, y]);
        let down = cov.project_point(&up).unwrap();
        let back = cov.lift_point_near(&down, &up).unwrap();
        prop_assert!((back.coords()[0] - x).abs() < 1e-12 && (back.coords()[1] - y).abs() < 1e-12);
    }

    #[test]
    fn project_after_lift_is_identity(seed in any::<u64>(), x0 in 0.0f64..1.0) {
        let cov = CoveringDescriptor::new(ManifoldModel::circle(1.0).unwrap()).unwrap();
        let k = heat(cov.base().clone());
        let grid = TimeGrid::uniform(0.5, 64).unwrap();
        let base = sample_path(&k, &Point::scalar(x0), &grid, &RngContract::new(seed, 0)).unwrap();
        let lifted = lift_path(&cov, &base, &Point::scalar(x0 + 3.0)).unwrap();
        let again = project_path(&cov, &lifted).unwrap();
        for (p, q) in base.points().iter().zip(again.points()) {
            prop_assert!(cov.base().distance(p, q).unwrap() < 1e-12);
        }
    }

    #[test]
    fn bridges_end_exactly_at_the_target(seed in any::<u64>(), x0 in 0.0f64..1.0, y0 in 0.0f64..1.0, n in 1usize..20) {
        let grid = TimeGrid::uniform(0.7, n).unwrap();
        for model in [ManifoldModel::circle(1.0).unwrap(), ManifoldModel::euclidean(1).unwrap()] {
            let k = heat(model);
            let p = sample_bridge(&k, &Point::scalar(x0), &Point::scalar(y0), &grid, &RngContract::new(seed, 1)).unwrap();
            prop_assert_eq!(p.start(), &Point::scalar(x0));
            prop_assert_eq!(p.end(), &Point::scalar(y0));
        }
    }

    #[test]
    fn sampling_is_a_function_of_seed_and_index(seed in any::<u64>(), i in 0u64..1000) {
        let k = heat(ManifoldModel::hyperbolic3());
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let o = k.model().origin();
        let a = sample_path(&k, &o, &grid, &RngContract::new(seed, i)).unwrap();
        let b = sample_path(&k, &o, &grid, &RngContract::new(seed, i)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn expected_distance_scales_like_sqrt_t(dim in 1usize..8, t in 0.001f64..100.0) {
        let m = ManifoldModel::euclidean(dim).unwrap();
        let v = expected_distance_analytic(&m, t).unwrap();
        prop_assert!(close(v, euclidean_distance_coefficient(dim) * t.sqrt(), 1e-14));
        if t >= 0.5 {
            let h = expected_distance_analytic(&ManifoldModel::hyperbolic3(), t).unwrap();
            prop_assert!(h > expected_distance_analytic(&ManifoldModel::euclidean(3).unwrap(), t).unwrap());
        }
    }
}
