//! Second-difference stencils on [`Field`]s and the tridiagonal machinery
//! behind the ADI sweeps.
//!
//! Stencil results are defined on interior nodes; boundary entries of the
//! returned field are left at zero and carry no meaning.

use crate::error::{Error, Result};
use crate::model::Field;

/// `δx² u = (u_{i−1,j} − 2u_{ij} + u_{i+1,j}) / h1²` at interior nodes.
pub fn apply_dxx(u: &Field, h1: f64) -> Field {
    let (m1, m2) = u.shape();
    let inv = 1.0 / (h1 * h1);
    let mut out = Field::zeros(m1, m2);
    for i in 1..m1 {
        for j in 1..m2 {
            out[(i, j)] = (u[(i - 1, j)] - 2.0 * u[(i, j)] + u[(i + 1, j)]) * inv;
        }
    }
    out
}

/// `δy² u = (u_{i,j−1} − 2u_{ij} + u_{i,j+1}) / h2²` at interior nodes.
pub fn apply_dyy(u: &Field, h2: f64) -> Field {
    let (m1, m2) = u.shape();
    let inv = 1.0 / (h2 * h2);
    let mut out = Field::zeros(m1, m2);
    for i in 1..m1 {
        for j in 1..m2 {
            out[(i, j)] = (u[(i, j - 1)] - 2.0 * u[(i, j)] + u[(i, j + 1)]) * inv;
        }
    }
    out
}

/// `δx² δy² u` at interior nodes (the 9-point cross stencil).
pub fn apply_dxxdyy(u: &Field, h1: f64, h2: f64) -> Field {
    let (m1, m2) = u.shape();
    let inv = 1.0 / (h1 * h1 * h2 * h2);
    let mut out = Field::zeros(m1, m2);
    let dyy = |i: usize, j: usize| u[(i, j - 1)] - 2.0 * u[(i, j)] + u[(i, j + 1)];
    for i in 1..m1 {
        for j in 1..m2 {
            out[(i, j)] = (dyy(i - 1, j) - 2.0 * dyy(i, j) + dyy(i + 1, j)) * inv;
        }
    }
    out
}

/// `A x = rhs` with `A` tridiagonal; `lower[i]` couples row `i + 1` to
/// column `i`, `upper[i]` couples row `i` to column `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Smallest `|diag_i| − |lower_{i−1}| − |upper_i|` over all rows.
    pub fn dominance_margin(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let lo = if i > 0 { self.lower[i - 1].abs() } else { 0.0 };
                let up = self.upper.get(i).map_or(0.0, |u| u.abs());
                self.diag[i].abs() - lo - up
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_dominant(&self) -> bool {
        self.dominance_margin() > 0.0
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Forward-elimination factors of a tridiagonal matrix, reusable across
/// right-hand sides.
#[derive(Clone, Debug)]
pub struct ThomasFactorization {
    lower: Vec<f64>,
    /// Modified super-diagonal `c'_i`.
    cprime: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl ThomasFactorization {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 1, "empty tridiagonal system");
        assert_eq!(lower.len(), n - 1);
        assert_eq!(upper.len(), n - 1);
        let mut cprime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - lower[i - 1] * cprime[i - 1] };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                cprime[i] = upper[i] * inv_pivot[i];
            }
        }
        Ok(Self { lower: lower.to_vec(), cprime, inv_pivot })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.cprime[i] * rhs[i + 1];
        }
    }
}

/// Solves `sys`. Inputs are left untouched.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let fact = ThomasFactorization::new(&sys.lower, &sys.diag, &sys.upper)?;
    let mut x = sys.rhs.clone();
    fact.solve_in_place(&mut x);
    Ok(x)
}

/// Matrix of `√μ I − δ²/(2√μ)` on `n` interior unknowns with spacing `h`.
/// The right-hand side is left zero.
pub fn sweep_matrix(mu: f64, h: f64, n: usize) -> TridiagonalSystem {
    let sqrt_mu = mu.sqrt();
    let off = -1.0 / (2.0 * sqrt_mu * h * h);
    let diag = sqrt_mu + 1.0 / (sqrt_mu * h * h);
    TridiagonalSystem {
        lower: vec![off; n.saturating_sub(1)],
        diag: vec![diag; n],
        upper: vec![off; n.saturating_sub(1)],
        rhs: vec![0.0; n],
    }
}
