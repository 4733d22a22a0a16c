//! Self-check against the independent oracles.

use clap::ValueEnum;
use dowave::analysis::observed_order;
use dowave::coefficients::{gamma, order_integral, CoefficientTable};
use dowave::model::{constant_case, example1, zero_case, Discretization, Resolution};
use dowave::operators::{thomas_solve, TridiagonalSystem};
use dowave::reference::{adi_dense_gap, dense_solve, precise_order_integral, splitting_gap};
use dowave::stepper::run;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Small,
    Full,
}

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Smallest factor by which |ADI − unsplit| must shrink when τ halves.
pub const SPLITTING_MIN_RATIO: f64 = 3.0;
pub const ORACLE_TOL: f64 = 1e-10;

fn check(name: &'static str, f: impl FnOnce() -> dowave::Result<(bool, String)>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e}") },
    }
}

fn adi_vs_dense(scale: Scale) -> Check {
    check("ADI vs dense factored solve", || {
        let spec = example1();
        let grids: Vec<usize> = match scale {
            Scale::Small => vec![2, 3, 5, 9],
            Scale::Full => (2..=17).collect(),
        };
        let mut worst = 0.0f64;
        for &m in &grids {
            worst = worst.max(adi_dense_gap(&spec, &Discretization::new(&spec, Resolution::square(m, 10, 8))?)?);
        }
        Ok((
            worst <= ORACLE_TOL,
            format!("max residual {worst:.3e} (tolerance {ORACLE_TOL:.0e}) over M = {grids:?}, 10 steps"),
        ))
    })
}

fn splitting(scale: Scale) -> Check {
    check("splitting perturbation decay", || {
        let spec = example1();
        let steps: &[usize] = match scale {
            Scale::Small => &[8, 16],
            Scale::Full => &[4, 8, 16, 32],
        };
        let gaps = steps
            .iter()
            .map(|&n| splitting_gap(&spec, &Discretization::new(&spec, Resolution::square(8, n, 8))?))
            .collect::<dowave::Result<Vec<f64>>>()?;
        let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
        let pass = ratios.iter().all(|&r| r >= SPLITTING_MIN_RATIO);
        let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
        Ok((
            pass,
            format!("8x8, K = 8, N = {steps:?}: ratios [{}] (each must be >= {SPLITTING_MIN_RATIO})", shown.join(", ")),
        ))
    })
}

fn coefficients(scale: Scale) -> Check {
    check("coefficient identities", || {
        let spec = example1();
        let res = match scale {
            Scale::Small => Resolution::square(8, 256, 16),
            Scale::Full => Resolution::square(8, 2048, 64),
        };
        let disc = Discretization::new(&spec, res)?;
        let t = CoefficientTable::build(&spec, &disc)?;
        let n = t.steps();
        let monotone = (0..res.k).all(|l| (0..n - 1).all(|k| t.a(l, k) > t.a(l, k + 1) && t.a(l, k + 1) > 0.0));
        let positive = t.weights().iter().all(|&w| w > 0.0);
        let mut acc = 0.0;
        let mut tele = 0.0f64;
        for m in 2..=n {
            acc += t.w(m - 1);
            let tail: f64 = t.level_scales().iter().enumerate().map(|(l, c)| c * t.a(l, m - 1)).sum();
            let want = t.mu() - tail;
            tele = tele.max((acc - want).abs() / want.abs());
        }
        let s1 = (t.s(1) - t.tau() * t.mu()).abs() / (t.tau() * t.mu());
        Ok((
            monotone && positive && tele <= 1e-12 && s1 <= 1e-14,
            format!(
                "N = {n}, K = {}: a_k decreasing {monotone}, W_j > 0 {positive}, telescoping {tele:.1e}, s_1 vs tau*mu {s1:.1e}",
                res.k
            ),
        ))
    })
}

fn quadrature() -> Check {
    check("order quadrature", || {
        let p = |b: f64| gamma(4.0 - b);
        let exact = precise_order_integral(p)?;
        let errs = [8, 16, 32, 64, 128]
            .iter()
            .map(|&k| Ok((order_integral(p, k)? - exact).abs()))
            .collect::<dowave::Result<Vec<f64>>>()?;
        let orders = errs.windows(2).map(|w| observed_order(w[0], w[1], 2.0)).collect::<dowave::Result<Vec<f64>>>()?;
        let shown: Vec<String> = orders.iter().map(|o| format!("{o:.4}")).collect();
        Ok((
            orders.iter().all(|o| (1.9..=2.1).contains(o)),
            format!("observed orders [{}] for K = 8..128 (required [1.9, 2.1])", shown.join(", ")),
        ))
    })
}

fn fixed_points() -> Check {
    check("zero and constant fixed points", || {
        let mut worst = 0.0f64;
        for (spec, c) in [(zero_case(), 0.0), (constant_case(-1.25), -1.25)] {
            let u = run(&spec, &Discretization::new(&spec, Resolution::new(7, 9, 12, 5))?, None)?;
            worst = worst.max(u.values().iter().fold(0.0f64, |m, v| m.max((v - c).abs())));
        }
        Ok((worst <= 1e-12, format!("max drift {worst:.1e}")))
    })
}

fn thomas(scale: Scale) -> Check {
    check("Thomas vs dense elimination", || {
        let cases = match scale {
            Scale::Small => 200,
            Scale::Full => 1000,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let n = rng.gen_range(2..=200);
            let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n)
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
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                a[i * n + i] = diag[i];
                if i + 1 < n {
                    a[i * n + i + 1] = upper[i];
                    a[(i + 1) * n + i] = lower[i];
                }
            }
            let y = dense_solve(a, rhs.clone())?;
            let x = thomas_solve(&TridiagonalSystem { lower, diag, upper, rhs })?;
            for (p, q) in x.iter().zip(&y) {
                worst = worst.max((p - q).abs() / q.abs().max(1.0));
            }
        }
        Ok((worst <= ORACLE_TOL, format!("{cases} random dominant systems, max gap {worst:.1e}")))
    })
}

pub fn run_checks(scale: Scale) -> Vec<Check> {
    vec![adi_vs_dense(scale), splitting(scale), coefficients(scale), quadrature(), fixed_points(), thomas(scale)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scale_passes() {
        let checks = run_checks(Scale::Small);
        assert_eq!(checks.len(), 6);
        for c in &checks {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
