//! Order-quadrature nodes and the Caputo-difference coefficients consumed by
//! the stepper.
//!
//! With `c_l = Δβ p(β_l) τ^{-β_l} / Γ(3 − β_l)` the scheme only ever needs
//!
//! * `μ   = Σ_l c_l`
//! * `W_j = Σ_l c_l (a_{j−1}^{(l)} − a_j^{(l)})` for the history term, a pure
//!   function of the lag `j`;
//! * `s_n = τ Σ_l c_l a_{n−1}^{(l)}` multiplying ψ2 at level `n`.

use crate::error::{Error, Result};
use crate::model::{Discretization, ProblemSpec};

/// Γ(x) for real `x`. Relative error is at the 1e-15 level on [1, 3].
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Midpoints `β_l = 1 + (2l − 1)Δβ/2`, `l = 1..K`, of the uniform panels of [1, 2].
pub fn quad_nodes(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidDiscretization("K must be at least 1".into()));
    }
    let db = 1.0 / k as f64;
    Ok((1..=k).map(|l| 1.0 + (2 * l - 1) as f64 * db / 2.0).collect())
}

/// `a_k = (k+1)^{2−β} − k^{2−β}`.
///
/// Evaluated as `k^e · expm1(e · ln(1 + 1/k))` so large `k` does not lose
/// digits to cancellation.
pub fn caputo_a(k: usize, beta: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let e = 2.0 - beta;
    let kf = k as f64;
    (e * kf.ln()).exp() * (e * (1.0 / kf).ln_1p()).exp_m1()
}

/// Mid-point approximation `Δβ Σ_l p(β_l)` of `∫₁² p(β) dβ`.
pub fn order_integral(p: impl Fn(f64) -> f64, k: usize) -> Result<f64> {
    let db = 1.0 / k.max(1) as f64;
    Ok(db * quad_nodes(k)?.into_iter().map(p).sum::<f64>())
}

#[derive(Clone, Debug)]
pub struct CoefficientTable {
    betas: Vec<f64>,
    pvals: Vec<f64>,
    /// Per-level scale `c_l`.
    scales: Vec<f64>,
    /// `a[l * steps + k]` for `k = 0..steps`.
    a: Vec<f64>,
    steps: usize,
    tau: f64,
    mu: f64,
    /// `w[j]` for lag `j = 1..steps-1`; `w[0]` is unused.
    w: Vec<f64>,
    /// `s[n - 1]` for `n = 1..steps`.
    s: Vec<f64>,
}

impl CoefficientTable {
    pub fn build(spec: &ProblemSpec, disc: &Discretization) -> Result<Self> {
        Self::from_weight(|b| (spec.weight)(b), disc.k(), disc.n(), disc.tau())
    }

    pub fn from_weight(weight: impl Fn(f64) -> f64, k: usize, steps: usize, tau: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidDiscretization("N must be at least 1".into()));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidDiscretization(format!("time step {tau} is not positive")));
        }
        let betas = quad_nodes(k)?;
        let db = 1.0 / k as f64;
        let pvals: Vec<f64> = betas.iter().map(|&b| weight(b)).collect();
        if let Some((b, p)) = betas.iter().zip(&pvals).find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidProblem(format!("weight p({b}) = {p} is not positive")));
        }
        let scales: Vec<f64> =
            betas.iter().zip(&pvals).map(|(&b, &p)| db * p * (-b * tau.ln()).exp() / gamma(3.0 - b)).collect();

        let mut a = Vec::with_capacity(k * steps);
        for &b in &betas {
            a.extend((0..steps).map(|kk| caputo_a(kk, b)));
        }
        let mu = scales.iter().sum();

        let mut w = vec![0.0; steps];
        for (j, wj) in w.iter_mut().enumerate().skip(1) {
            *wj = scales.iter().enumerate().map(|(l, c)| c * (a[l * steps + j - 1] - a[l * steps + j])).sum();
        }
        let s = (0..steps)
            .map(|k1| tau * scales.iter().enumerate().map(|(l, c)| c * a[l * steps + k1]).sum::<f64>())
            .collect();

        Ok(Self { betas, pvals, scales, a, steps, tau, mu, w, s })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn pvals(&self) -> &[f64] {
        &self.pvals
    }

    pub fn level_scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `a_k^{(β_l)}` for level `l` (0-based) and `k < N`.
    pub fn a(&self, level: usize, k: usize) -> f64 {
        self.a[level * self.steps + k]
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// History weight for lag `j ∈ [1, N−1]`.
    pub fn w(&self, lag: usize) -> f64 {
        assert!(lag >= 1 && lag < self.steps, "lag {lag} outside 1..{}", self.steps);
        self.w[lag]
    }

    /// Lags `1..N` as a slice, `weights()[j - 1] = W_j`.
    pub fn weights(&self) -> &[f64] {
        &self.w[1..]
    }

    /// ψ2 coefficient for level `n ∈ [1, N]`.
    pub fn s(&self, n: usize) -> f64 {
        self.s[n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example1, Resolution};
    use std::f64::consts::SQRT_2;

    // mpmath, 40 digits
    #[allow(clippy::excessive_precision)]
    const GAMMA_REF: [(f64, f64); 8] = [
        (1.05, 0.973_504_265_562_775_643_2),
        (1.25, 0.906_402_477_055_477_077_98),
        (1.5, 0.886_226_925_452_758_013_65),
        (1.75, 0.919_062_526_848_883_233_85),
        (1.95, 0.979_880_651_272_580_586_36),
        (2.25, 1.133_003_096_319_346_347_5),
        (2.5, 1.329_340_388_179_137_020_5),
        (2.9, 1.827_355_080_624_036_096_9),
    ];

    #[test]
    fn gamma_matches_high_precision_values() {
        for (x, g) in GAMMA_REF {
            let rel = (gamma(x) - g).abs() / g;
            assert!(rel <= 1e-12, "Γ({x}) rel err {rel:e}");
        }
    }

    #[test]
    fn nodes() {
        assert_eq!(quad_nodes(1).unwrap(), vec![1.5]);
        assert_eq!(quad_nodes(2).unwrap(), vec![1.25, 1.75]);
        assert_eq!(quad_nodes(4).unwrap(), vec![1.125, 1.375, 1.625, 1.875]);
        assert!(matches!(quad_nodes(0), Err(Error::InvalidDiscretization(_))));
        let n = quad_nodes(37).unwrap();
        assert!(n.windows(2).all(|w| w[0] < w[1]));
        assert!(n.iter().all(|&b| b > 1.0 && b < 2.0));
    }

    #[test]
    fn caputo_a_closed_forms() {
        assert_eq!(caputo_a(0, 1.3), 1.0);
        assert!((caputo_a(1, 1.5) - (SQRT_2 - 1.0)).abs() < 1e-15);
        assert!((caputo_a(3, 1.5) - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        // direct formula agrees where cancellation is harmless
        for k in 1..50 {
            let direct = ((k + 1) as f64).powf(0.3) - (k as f64).powf(0.3);
            assert!((caputo_a(k, 1.7) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn mu_and_first_weight_for_single_panel() {
        let t = CoefficientTable::build(&example1(), &disc(1, 1)).unwrap();
        assert!((t.mu() - 3.0 * SQRT_2).abs() < 1e-13);

        // W_1 needs two levels; keep τ = 0.5.
        let t = CoefficientTable::from_weight(|b| gamma(4.0 - b), 1, 2, 0.5).unwrap();
        assert!((t.w(1) - (6.0 * SQRT_2 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn mu_unit_weight() {
        // 10^1.5 / Γ(1.5) from mpmath
        let t = CoefficientTable::from_weight(|_| 1.0, 1, 5, 0.1).unwrap();
        assert!((t.mu() - 35.682_482_323_055_422).abs() / 35.68 < 1e-13);
    }

    #[test]
    fn table_invariants() {
        let t = CoefficientTable::build(&example1(), &disc(400, 23)).unwrap();
        let n = t.steps();
        for l in 0..23 {
            assert_eq!(t.a(l, 0), 1.0);
            for k in 0..n - 1 {
                assert!(t.a(l, k) > t.a(l, k + 1) && t.a(l, k + 1) > 0.0);
            }
        }
        assert!(t.mu() > 0.0);
        assert!(t.weights().iter().all(|&w| w > 0.0));
        assert!((t.s(1) - t.tau() * t.mu()).abs() <= 1e-14 * t.s(1));
        for m in 1..n {
            assert!(t.s(m) > t.s(m + 1) && t.s(m + 1) > 0.0);
        }
    }

    #[test]
    fn telescoping_history_weights() {
        let t = CoefficientTable::build(&example1(), &disc(300, 17)).unwrap();
        let mut acc = 0.0;
        for n in 2..=t.steps() {
            acc += t.w(n - 1);
            let tail: f64 = t.level_scales().iter().enumerate().map(|(l, c)| c * t.a(l, n - 1)).sum();
            let rhs = t.mu() - tail;
            assert!((acc - rhs).abs() <= 1e-12 * rhs.abs(), "n = {n}");
        }
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let err = CoefficientTable::from_weight(|b| 1.5 - b, 4, 3, 0.1).unwrap_err();
        assert!(matches!(err, Error::InvalidProblem(_)));
    }

    #[test]
    fn order_integral_exact_cases() {
        for k in [1, 2, 7, 64] {
            assert!((order_integral(|_| 1.0, k).unwrap() - 1.0).abs() < 1e-15);
            assert!((order_integral(|b| b, k).unwrap() - 1.5).abs() < 1e-14);
        }
    }

    fn disc(n: usize, k: usize) -> Discretization {
        Discretization::new(&example1(), Resolution::square(4, n, k)).unwrap()
    }
}
