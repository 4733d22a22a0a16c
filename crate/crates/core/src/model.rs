//! Continuous problem data, discretization parameters and grid fields.
//!
//! A [`ProblemSpec`] describes
//!
//! ```text
//! ∫₁² p(β) ᶜD_t^β u dβ = u_xx + u_yy + f(x, y, t, u)   on (0,L1)×(0,L2)×(0,T]
//! u = φ on the boundary,  u(·,·,0) = ψ1,  u_t(·,·,0) = ψ2
//! ```
//!
//! with the data supplied as shareable closures so that built-in cases and
//! user-defined cases go through the same solver path.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{gamma, quad_nodes};
use crate::error::{Error, Result};

pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Tolerance for `φ(·,·,0) = ψ1` on boundary nodes.
pub const COMPATIBILITY_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    /// Order weight p(β) on [1, 2].
    pub weight: WeightFn,
    pub l1: f64,
    pub l2: f64,
    pub t_final: f64,
    pub psi1: SpatialFn,
    pub psi2: SpatialFn,
    pub phi: SpaceTimeFn,
    pub source: SourceFn,
    /// Lipschitz bound of the source in `u`. Reported only; never enforced.
    pub lipschitz: f64,
    /// Closed-form solution, when one is known.
    pub exact: Option<SpaceTimeFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("t_final", &self.t_final)
            .field("lipschitz", &self.lipschitz)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Checks domain sizes, weight positivity at the order nodes used by
    /// `disc`, and `φ(·,·,0) = ψ1` on the boundary nodes of the grid.
    pub fn validate(&self, disc: &Discretization) -> Result<()> {
        for (what, v) in [("L1", self.l1), ("L2", self.l2), ("T", self.t_final)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProblem(format!("{what} must be positive, got {v}")));
            }
        }
        for beta in quad_nodes(disc.k())? {
            let p = (self.weight)(beta);
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidProblem(format!("weight p({beta}) = {p} is not positive")));
            }
        }
        for (i, j) in disc.boundary_nodes() {
            let (x, y) = (disc.x(i), disc.y(j));
            let phi0 = (self.phi)(x, y, 0.0);
            let psi = (self.psi1)(x, y);
            if !((phi0 - psi).abs() <= COMPATIBILITY_TOL) {
                return Err(Error::InvalidProblem(format!(
                    "boundary data incompatible with initial data at ({x}, {y}): φ = {phi0}, ψ1 = {psi}"
                )));
            }
        }
        Ok(())
    }

    /// The order integral c0 = ∫₁² p(β) dβ.
    pub fn c0(&self) -> Result<f64> {
        let w = self.weight.clone();
        crate::reference::precise_order_integral(move |b| w(b))
    }

    pub fn exact_field(&self, disc: &Discretization, t: f64) -> Option<Field> {
        let exact = self.exact.as_ref()?;
        Some(Field::from_fn(disc, |x, y| exact(x, y, t)))
    }
}

/// The removable-singularity term `(6t² − 6t)/ln t`, continued by its limits
/// at `t = 0` (value 0) and `t = 1` (value 6).
pub fn log_kernel_term(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if t == 1.0 {
        6.0
    } else {
        (6.0 * t * t - 6.0 * t) / t.ln()
    }
}

fn cubic_profile(t: f64) -> f64 {
    t * t * t + 2.0 * t + 4.0
}

/// Reference solution `(t³ + 2t + 4) sin x sin y` of [`example1`].
pub fn analytic_example1(x: f64, y: f64, t: f64) -> f64 {
    cubic_profile(t) * x.sin() * y.sin()
}

/// Manufactured test problem on (0,π)² up to T = 1/2 with weight Γ(4 − β)
/// and nonlinear source containing `u²`.
pub fn example1() -> ProblemSpec {
    ProblemSpec {
        name: "example1".into(),
        weight: Arc::new(|beta| gamma(4.0 - beta)),
        l1: std::f64::consts::PI,
        l2: std::f64::consts::PI,
        t_final: 0.5,
        psi1: Arc::new(|x, y| 4.0 * x.sin() * y.sin()),
        psi2: Arc::new(|x, y| 2.0 * x.sin() * y.sin()),
        phi: Arc::new(|_, _, _| 0.0),
        source: Arc::new(|x, y, t, u| {
            let s = x.sin() * y.sin();
            let g = cubic_profile(t);
            s * (2.0 * g + log_kernel_term(t)) - g * g * s * s + u * u
        }),
        // f = u² is only locally Lipschitz; 2·max|u| over the solution range.
        lipschitz: 2.0 * cubic_profile(0.5),
        exact: Some(Arc::new(analytic_example1)),
    }
}

pub fn zero_case() -> ProblemSpec {
    constant_case(0.0).renamed("zero")
}

/// Constant data `u ≡ c` with no source; every scheme level reproduces `c`.
pub fn constant_case(c: f64) -> ProblemSpec {
    ProblemSpec {
        name: "constant".into(),
        weight: Arc::new(|_| 1.0),
        l1: std::f64::consts::PI,
        l2: std::f64::consts::PI,
        t_final: 0.5,
        psi1: Arc::new(move |_, _| c),
        psi2: Arc::new(|_, _| 0.0),
        phi: Arc::new(move |_, _, _| c),
        source: Arc::new(|_, _, _, _| 0.0),
        lipschitz: 1.0,
        exact: Some(Arc::new(move |_, _, _| c)),
    }
}

/// Manufactured case with time-dependent, nonzero boundary data on (0,1)²:
/// `u = (t³ + 2t + 4)(1 + x² + y²)`. Spatial second differences are exact on
/// this profile, so only the temporal and order-quadrature errors remain.
pub fn paraboloid_case() -> ProblemSpec {
    let bowl = |x: f64, y: f64| 1.0 + x * x + y * y;
    ProblemSpec {
        name: "paraboloid".into(),
        weight: Arc::new(|beta| gamma(4.0 - beta)),
        l1: 1.0,
        l2: 1.0,
        t_final: 0.5,
        psi1: Arc::new(move |x, y| 4.0 * bowl(x, y)),
        psi2: Arc::new(move |x, y| 2.0 * bowl(x, y)),
        phi: Arc::new(move |x, y, t| cubic_profile(t) * bowl(x, y)),
        source: Arc::new(move |x, y, t, u| {
            let exact = cubic_profile(t) * bowl(x, y);
            bowl(x, y) * log_kernel_term(t) - 4.0 * cubic_profile(t) + u * u - exact * exact
        }),
        lipschitz: 2.0 * cubic_profile(0.5) * 3.0,
        exact: Some(Arc::new(move |x, y, t| cubic_profile(t) * bowl(x, y))),
    }
}

/// Built-in cases addressable from configuration. `constant` takes its value
/// from `param` (default 1).
pub fn builtin_case(name: &str, param: Option<f64>) -> Option<ProblemSpec> {
    match name {
        "example1" => Some(example1()),
        "zero" => Some(zero_case()),
        "constant" => Some(constant_case(param.unwrap_or(1.0))),
        "paraboloid" => Some(paraboloid_case()),
        _ => None,
    }
}

pub const BUILTIN_CASES: &[&str] = &["example1", "zero", "constant", "paraboloid"];

impl ProblemSpec {
    fn renamed(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    /// Adds `delta(x, y)` to ψ1. `delta` must vanish on the boundary to keep
    /// the initial and boundary data compatible.
    pub fn with_initial_perturbation(&self, delta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> ProblemSpec {
        let psi1 = self.psi1.clone();
        let mut out = self.clone();
        out.psi1 = Arc::new(move |x, y| psi1(x, y) + delta(x, y));
        out.exact = None;
        out
    }
}

/// Cell and panel counts of a run; the step sizes follow from the problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
}

impl Resolution {
    pub fn new(m1: usize, m2: usize, n: usize, k: usize) -> Self {
        Self { m1, m2, n, k }
    }

    pub fn square(m: usize, n: usize, k: usize) -> Self {
        Self::new(m, m, n, k)
    }

    pub fn interior_len(&self) -> usize {
        self.m1.saturating_sub(1) * self.m2.saturating_sub(1)
    }

    /// Bytes held by the history buffer at the final step.
    pub fn history_bytes(&self) -> u64 {
        (self.n as u64) * (self.interior_len() as u64) * std::mem::size_of::<f64>() as u64
    }
}

/// A [`Resolution`] bound to a domain. Step sizes are derived, never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discretization {
    res: Resolution,
    l1: f64,
    l2: f64,
    t_final: f64,
}

impl Discretization {
    pub fn new(spec: &ProblemSpec, res: Resolution) -> Result<Self> {
        Self::with_domain(spec.l1, spec.l2, spec.t_final, res)
    }

    pub fn with_domain(l1: f64, l2: f64, t_final: f64, res: Resolution) -> Result<Self> {
        if res.m1 < 2 || res.m2 < 2 {
            return Err(Error::InvalidDiscretization(format!(
                "M1 and M2 must be at least 2, got M1 = {}, M2 = {}",
                res.m1, res.m2
            )));
        }
        if res.n < 1 {
            return Err(Error::InvalidDiscretization("N must be at least 1".into()));
        }
        if res.k < 1 {
            return Err(Error::InvalidDiscretization("K must be at least 1".into()));
        }
        Ok(Self { res, l1, l2, t_final })
    }

    pub fn resolution(&self) -> Resolution {
        self.res
    }
    pub fn m1(&self) -> usize {
        self.res.m1
    }
    pub fn m2(&self) -> usize {
        self.res.m2
    }
    pub fn n(&self) -> usize {
        self.res.n
    }
    pub fn k(&self) -> usize {
        self.res.k
    }
    pub fn l1(&self) -> f64 {
        self.l1
    }
    pub fn l2(&self) -> f64 {
        self.l2
    }
    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn h1(&self) -> f64 {
        self.l1 / self.res.m1 as f64
    }
    pub fn h2(&self) -> f64 {
        self.l2 / self.res.m2 as f64
    }
    pub fn tau(&self) -> f64 {
        self.t_final / self.res.n as f64
    }
    pub fn dbeta(&self) -> f64 {
        1.0 / self.res.k as f64
    }
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h1()
    }
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.h2()
    }
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }

    pub fn interior_len(&self) -> usize {
        self.res.interior_len()
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (m1, m2) = (self.res.m1, self.res.m2);
        (0..=m1)
            .flat_map(move |i| (0..=m2).map(move |j| (i, j)))
            .filter(move |&(i, j)| i == 0 || j == 0 || i == m1 || j == m2)
    }
}

/// Grid function on the closed mesh, `(M1+1)×(M2+1)` values stored row-major:
/// node `(i, j)` lives at `i * (M2 + 1) + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    m1: usize,
    m2: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(m1: usize, m2: usize) -> Self {
        Self { m1, m2, values: vec![0.0; (m1 + 1) * (m2 + 1)] }
    }

    pub fn from_values(m1: usize, m2: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (m1 + 1) * (m2 + 1) {
            return Err(Error::ShapeMismatch { expected: (m1 + 1, m2 + 1), found: (values.len(), 1) });
        }
        Ok(Self { m1, m2, values })
    }

    pub fn from_fn(disc: &Discretization, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(disc.m1(), disc.m2());
        for i in 0..=disc.m1() {
            for j in 0..=disc.m2() {
                out[(i, j)] = f(disc.x(i), disc.y(j));
            }
        }
        out
    }

    /// Cell counts `(M1, M2)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row stride of the storage (`M2 + 1`).
    pub fn stride(&self) -> usize {
        self.m2 + 1
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn interior(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let (m1, m2) = (self.m1, self.m2);
        (1..m1).flat_map(move |i| (1..m2).map(move |j| (i, j, self[(i, j)])))
    }

    /// Interior values in row-major order.
    pub fn interior_values(&self) -> Vec<f64> {
        self.interior().map(|(_, _, v)| v).collect()
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_interior_diff(&self, other: &Field) -> f64 {
        self.interior().map(|(i, j, v)| (v - other[(i, j)]).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn check_shape(&self, other: &Field) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: (self.m1 + 1, self.m2 + 1),
                found: (other.m1 + 1, other.m2 + 1),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Field {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * (self.m2 + 1) + j]
    }
}

impl IndexMut<(usize, usize)> for Field {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * (self.m2 + 1) + j]
    }
}
