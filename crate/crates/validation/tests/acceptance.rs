//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dowave::analysis::{observed_order, run_study, Schedule, StudyOptions, StudyReport};
use dowave::coefficients::{gamma, order_integral, CoefficientTable};
use dowave::model::{constant_case, example1, zero_case, Discretization, Resolution};
use dowave::operators::{thomas_solve, TridiagonalSystem};
use dowave::reference::{adi_dense_gap, dense_solve, precise_order_integral, splitting_gap};
use dowave::stepper::run;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn fmt_orders(v: &[Option<f64>]) -> String {
    v.iter().map(|x| x.map_or("-".into(), |o| format!("{o:.4}"))).collect::<Vec<_>>().join(", ")
}

/// Compares a study against tabulated errors and orders. `l2` and `l2_orders`
/// may be empty when only the max-norm column is checked.
fn check_table(
    rep: &StudyReport,
    inf: &[f64],
    inf_orders: &[f64],
    l2: &[f64],
    l2_orders: &[f64],
    err_tol: f64,
    order_tol: f64,
) -> Outcome {
    let got_inf: Vec<f64> = rep.rows.iter().map(|r| r.error_inf.unwrap_or(f64::NAN)).collect();
    let got_l2: Vec<f64> = rep.rows.iter().map(|r| r.error_l2.unwrap_or(f64::NAN)).collect();
    let ord_inf: Vec<Option<f64>> = rep.rows.iter().map(|r| r.order_inf).collect();
    let ord_l2: Vec<Option<f64>> = rep.rows.iter().map(|r| r.order_l2).collect();
    let mut pass = rep.rows.iter().all(|r| r.failure.is_none());
    for (g, w) in got_inf.iter().zip(inf) {
        pass &= rel(*g, *w) <= err_tol;
    }
    for (g, w) in got_l2.iter().zip(l2) {
        pass &= rel(*g, *w) <= err_tol;
    }
    for (g, w) in ord_inf.iter().skip(1).zip(inf_orders) {
        pass &= g.is_some_and(|g| (g - w).abs() <= order_tol);
    }
    for (g, w) in ord_l2.iter().skip(1).zip(l2_orders) {
        pass &= g.is_some_and(|g| (g - w).abs() <= order_tol);
    }
    let secs: f64 = rep.rows.iter().map(|r| r.seconds).sum();
    Outcome {
        pass,
        detail: format!(
            "err_inf [{}] order_inf [{}] err_l2 [{}] order_l2 [{}] ({secs:.0} s)",
            fmt_list(&got_inf),
            fmt_orders(&ord_inf),
            fmt_list(&got_l2),
            fmt_orders(&ord_l2)
        ),
    }
}

fn table1() -> Outcome {
    let sched = Schedule::builtin("table1").unwrap();
    let rep = run_study(&example1(), &sched, StudyOptions::default());
    check_table(
        &rep,
        &[0.0839, 0.0439, 0.0227, 0.0117, 0.0059],
        &[0.9344, 0.9515, 0.9526, 0.9877],
        &[0.1225, 0.0634, 0.0326, 0.0167, 0.0085],
        &[0.9502, 0.9596, 0.9650, 0.9743],
        0.05,
        0.05,
    )
}

fn table2() -> Outcome {
    let sched = Schedule::builtin("table2").unwrap();
    let rep = run_study(&example1(), &sched, StudyOptions::default());
    check_table(&rep, &[0.0093, 0.0024, 6.0481e-4], &[1.9542, 1.9885], &[], &[], 0.05, 0.1)
}

fn table3() -> Outcome {
    let sched = Schedule::builtin("table3").unwrap();
    let rep = run_study(&example1(), &sched, StudyOptions::default());
    check_table(&rep, &[0.4602, 0.1195, 0.0301, 0.0075], &[1.9453, 1.9892, 2.0048], &[], &[], 0.05, 0.1)
}

fn oracle_equivalence() -> Outcome {
    let spec = example1();
    let mut worst = 0.0f64;
    for m in 2..=17 {
        let disc = Discretization::new(&spec, Resolution::square(m, 10, 8)).unwrap();
        match adi_dense_gap(&spec, &disc) {
            Ok(g) => worst = worst.max(g),
            Err(e) => return Outcome { pass: false, detail: format!("M = {m}: {e}") },
        }
    }
    Outcome { pass: worst <= 1e-10, detail: format!("grids 2x2..17x17, 10 steps, max residual {worst:.3e}") }
}

fn splitting_gap_at(n: usize) -> dowave::Result<f64> {
    let spec = example1();
    splitting_gap(&spec, &Discretization::new(&spec, Resolution::square(8, n, 8))?)
}

fn splitting_scaling() -> Outcome {
    match (splitting_gap_at(8), splitting_gap_at(16)) {
        (Ok(coarse), Ok(fine)) => {
            let ratio = coarse / fine;
            Outcome {
                pass: (3.0..=5.0).contains(&ratio),
                detail: format!(
                    "8x8, K = 8, tau 1/16 -> 1/32: |ADI - unsplit| {coarse:.4e} -> {fine:.4e}, ratio {ratio:.3} (required [3, 5])"
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => Outcome { pass: false, detail: e.to_string() },
    }
}

fn random_dominant(rng: &mut ChaCha8Rng) -> TridiagonalSystem {
    let n = rng.gen_range(2..=200);
    let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let diag = (0..n)
        .map(|i| {
            let lo: f64 = if i > 0 { lower[i - 1] } else { 0.0 };
            let up: f64 = if i + 1 < n { upper[i] } else { 0.0 };
            let d = lo.abs() + up.abs() + rng.gen_range(0.05..5.0);
            if rng.gen::<bool>() {
                -d
            } else {
                d
            }
        })
        .collect();
    let rhs = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    TridiagonalSystem { lower, diag, upper, rhs }
}

fn thomas_vs_dense() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let sys = random_dominant(&mut rng);
        let n = sys.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = sys.diag[i];
            if i + 1 < n {
                a[i * n + i + 1] = sys.upper[i];
                a[(i + 1) * n + i] = sys.lower[i];
            }
        }
        let x = thomas_solve(&sys).unwrap();
        let y = dense_solve(a, sys.rhs.clone()).unwrap();
        for (p, q) in x.iter().zip(&y) {
            worst = worst.max((p - q).abs() / q.abs().max(1.0));
        }
    }
    worst
}

fn invariant_suite() -> Outcome {
    let mut fails: Vec<String> = Vec::new();
    let spec = example1();

    for res in [Resolution::square(8, 80, 160), Resolution::square(8, 800, 40), Resolution::square(8, 2048, 64)] {
        let disc = Discretization::new(&spec, res).unwrap();
        let t = CoefficientTable::build(&spec, &disc).unwrap();
        let n = t.steps();
        let monotone = (0..res.k).all(|l| (0..n - 1).all(|k| t.a(l, k) > t.a(l, k + 1) && t.a(l, k + 1) > 0.0));
        if !monotone {
            fails.push(format!("a_k not monotone-positive at N = {n}, K = {}", res.k));
        }
        if !t.weights().iter().all(|&w| w > 0.0) {
            fails.push(format!("W_j not positive at N = {n}"));
        }
        let mut acc = 0.0;
        let mut tele = 0.0f64;
        for m in 2..=n {
            acc += t.w(m - 1);
            let tail: f64 = t.level_scales().iter().enumerate().map(|(l, c)| c * t.a(l, m - 1)).sum();
            tele = tele.max(rel(acc, t.mu() - tail));
        }
        if tele > 1e-12 {
            fails.push(format!("telescoping off by {tele:.2e} at N = {n}"));
        }
        let s1 = rel(t.s(1), t.tau() * t.mu());
        if s1 > 1e-14 {
            fails.push(format!("s_1 - tau mu off by {s1:.2e}"));
        }
    }

    for spec in [zero_case(), constant_case(2.75)] {
        let c = (spec.psi1)(0.3, 0.3);
        let disc = Discretization::new(&spec, Resolution::new(9, 7, 12, 6)).unwrap();
        let u = run(&spec, &disc, None).unwrap();
        let drift = u.values().iter().fold(0.0f64, |m, v| m.max((v - c).abs()));
        if drift > 1e-12 {
            fails.push(format!("{} drifts by {drift:.2e}", spec.name));
        }
    }

    let thomas = thomas_vs_dense();
    if thomas > 1e-10 {
        fails.push(format!("Thomas vs dense gap {thomas:.2e}"));
    }

    let p = |b: f64| gamma(4.0 - b);
    let exact = precise_order_integral(p).unwrap();
    let errs: Vec<f64> = [8, 16, 32, 64, 128].iter().map(|&k| (order_integral(p, k).unwrap() - exact).abs()).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| observed_order(w[0], w[1], 2.0).unwrap()).collect();
    if !orders.iter().all(|o| (o - 2.0).abs() <= 0.1) {
        fails.push(format!("midpoint orders {orders:?}"));
    }

    let summary = format!(
        "Thomas gap {thomas:.2e}, quadrature orders [{}]",
        orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ")
    );
    if fails.is_empty() {
        Outcome { pass: true, detail: summary }
    } else {
        Outcome { pass: false, detail: format!("{summary}; {}", fails.join("; ")) }
    }
}

fn stability_probe() -> Outcome {
    let base = example1();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let modes: Vec<(f64, i32, i32)> =
        (0..10).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1..8), rng.gen_range(1..8))).collect();
    let norm: f64 = modes.iter().map(|m| m.0.abs()).sum();
    let amp = 1e-3 / norm;
    let perturbed = base.with_initial_perturbation(move |x, y| {
        amp * modes.iter().map(|&(a, p, q)| a * (p as f64 * x).sin() * (q as f64 * y).sin()).sum::<f64>()
    });

    let mut changes = Vec::new();
    for n in [20, 40, 80] {
        let disc = Discretization::new(&base, Resolution::square(16, n, 16)).unwrap();
        let u = run(&base, &disc, None).unwrap();
        let v = run(&perturbed, &disc, None).unwrap();
        changes.push(u.max_abs_diff(&v));
    }
    let hi = changes.iter().cloned().fold(f64::MIN, f64::max);
    let lo = changes.iter().cloned().fold(f64::MAX, f64::min);
    let spread = hi / lo;
    Outcome {
        pass: lo > 0.0 && spread <= 2.0,
        detail: format!("16x16, K = 16, tau 1/40, 1/80, 1/160: changes [{}], spread {spread:.3}", fmt_list(&changes)),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("temporal-refinement table", table1),
        ("time/order refinement table, rows 1-3", table2),
        ("joint refinement table, rows 1-4", table3),
        ("oracle equivalence", oracle_equivalence),
        ("splitting-perturbation scaling", splitting_scaling),
        ("invariant suite", invariant_suite),
        ("stability probe", stability_probe),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let out = check();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {name}: {} [{:.1} s]", out.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
