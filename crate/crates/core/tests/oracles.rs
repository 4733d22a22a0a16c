use std::f64::consts::PI;

use dowave::analysis::{error_norms, observed_order};
use dowave::coefficients::{gamma, order_integral};
use dowave::model::{example1, paraboloid_case, Discretization, Field, Resolution};
use dowave::reference::{adi_dense_gap, precise_order_integral, refined_order_integral, RefinementRule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sweep_vs_dense(spec: &dowave::ProblemSpec, res: Resolution) -> f64 {
    adi_dense_gap(spec, &Discretization::new(spec, res).unwrap()).unwrap()
}

#[test]
fn sweeps_equal_dense_product_solve() {
    for m in [2, 3, 5, 8, 12, 17] {
        let gap = sweep_vs_dense(&example1(), Resolution::square(m, 10, 4));
        assert!(gap <= 1e-10, "M = {m}: {gap:e}");
    }
    let gap = sweep_vs_dense(&paraboloid_case(), Resolution::new(9, 13, 10, 3));
    assert!(gap <= 1e-10, "paraboloid: {gap:e}");
}

#[test]
fn sweeps_equal_dense_from_random_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let amps: Vec<(f64, usize, usize)> =
        (0..12).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1..8), rng.gen_range(1..8))).collect();
    let spec = example1().with_initial_perturbation(move |x, y| {
        amps.iter().map(|&(a, p, q)| a * (p as f64 * x).sin() * (q as f64 * y).sin()).sum()
    });
    let gap = sweep_vs_dense(&spec, Resolution::square(9, 10, 5));
    assert!(gap <= 1e-10, "{gap:e}");
}

#[test]
fn midpoint_order_quadrature_is_second_order() {
    let p = |b: f64| gamma(4.0 - b);
    let exact = precise_order_integral(p).unwrap();
    // mid(K) − I from mpmath
    let frozen = [(8, -9.254e-4), (16, -2.315e-4), (32, -5.789e-5), (64, -1.447e-5), (128, -3.618e-6)];
    let mut prev: Option<f64> = None;
    for (k, want) in frozen {
        let e = order_integral(p, k).unwrap() - exact;
        assert!((e - want).abs() <= 1e-3 * want.abs(), "K = {k}: {e:e}");
        if let Some(pe) = prev {
            let order = observed_order(pe.abs(), e.abs(), 2.0).unwrap();
            assert!((order - 2.0).abs() <= 0.1, "K = {k}: order {order}");
        }
        prev = Some(e);
    }
}

#[test]
fn order_integral_routes_agree() {
    let cases: [&dyn Fn(f64) -> f64; 4] =
        [&|b| gamma(4.0 - b), &|b| (3.0 * b).cos() + 2.0, &|b| 1.0 / b, &|b| (b - 1.0).powi(5) + 0.1];
    for p in cases {
        let t = refined_order_integral(p, RefinementRule::Trapezoid).unwrap();
        let m = refined_order_integral(p, RefinementRule::Midpoint).unwrap();
        assert!((t - m).abs() <= 1e-12 * t.abs());
    }
    assert!((refined_order_integral(|b| 1.0 / b, RefinementRule::Midpoint).unwrap() - 2f64.ln()).abs() < 1e-13);
}

#[test]
fn example1_errors_fall_with_refinement() {
    let spec = example1();
    let mut prev = f64::INFINITY;
    for (m, n, k) in [(2, 32, 8), (4, 128, 16)] {
        let disc = Discretization::new(&spec, Resolution::square(m, n, k)).unwrap();
        let u = dowave::run(&spec, &disc, None).unwrap();
        let exact = spec.exact_field(&disc, disc.t_final()).unwrap();
        let e = error_norms(&u, &exact, &disc).unwrap();
        assert!(e.inf < prev);
        assert!(e.l2 <= e.inf * PI);
        prev = e.inf;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l2_bounded_by_max_norm(m1 in 2usize..10, m2 in 2usize..10, seed in any::<u64>()) {
        let disc = Discretization::with_domain(2.0, 1.5, 1.0, Resolution::new(m1, m2, 1, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Field::from_values(m1, m2, (0..(m1 + 1) * (m2 + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let b = Field::zeros(m1, m2);
        let e = error_norms(&a, &b, &disc).unwrap();
        prop_assert!(e.l2 <= e.inf * (disc.l1() * disc.l2()).sqrt() + 1e-15);
    }

    #[test]
    fn order_is_scale_invariant(e1 in 1e-8f64..1.0, e2 in 1e-8f64..1.0, s in 1e-3f64..1e3, r in 1.5f64..8.0) {
        let a = observed_order(e1, e2, r).unwrap();
        let b = observed_order(s * e1, s * e2, r).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}
