//! Independent oracles for the production path: dense one-shot solves of the
//! per-step systems and a refined order integral.
//!
//! Nothing here touches the tridiagonal sweeps; the dense matrices are
//! assembled straight from the stencil coefficients.

use crate::error::{Error, Result};
use crate::model::{Discretization, Field, ProblemSpec};
use crate::stepper::Solver;

/// Largest interior unknown count the dense oracles accept.
pub const DENSE_LIMIT: usize = 4096;

/// Gaussian elimination with partial pivoting on a row-major `n × n` matrix.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for col in 0..n {
        let (piv, max) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if max == 0.0 || !max.is_finite() {
            return Err(Error::SingularDense { column: col });
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Ok(x)
}

/// 3×3 stencil weights, indexed `[di + 1][dj + 1]`.
type Stencil = [[f64; 3]; 3];

fn factored_stencil(mu: f64, h1: f64, h2: f64) -> Stencil {
    let (a, b) = (1.0 / (h1 * h1), 1.0 / (h2 * h2));
    let m = 1.0 / (4.0 * mu) * a * b;
    [
        [m, -0.5 * a - 2.0 * m, m],
        [-0.5 * b - 2.0 * m, mu + a + b + 4.0 * m, -0.5 * b - 2.0 * m],
        [m, -0.5 * a - 2.0 * m, m],
    ]
}

fn unsplit_stencil(mu: f64, h1: f64, h2: f64) -> Stencil {
    let (a, b) = (1.0 / (h1 * h1), 1.0 / (h2 * h2));
    [[0.0, -0.5 * a, 0.0], [-0.5 * b, mu + a + b, -0.5 * b], [0.0, -0.5 * a, 0.0]]
}

/// Assembles the interior system for `stencil` with boundary values taken
/// from φ at `t_new`, then solves it densely.
fn dense_stencil_solve(
    disc: &Discretization,
    spec: &ProblemSpec,
    stencil: &Stencil,
    rhs: &Field,
    t_new: f64,
) -> Result<Field> {
    let (m1, m2) = (disc.m1(), disc.m2());
    let cols = m2 - 1;
    let n = disc.interior_len();
    if n > DENSE_LIMIT {
        return Err(Error::OracleTooLarge { unknowns: n, limit: DENSE_LIMIT });
    }
    let idx = |i: usize, j: usize| (i - 1) * cols + (j - 1);
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for i in 1..m1 {
        for j in 1..m2 {
            let r = idx(i, j);
            b[r] = rhs[(i, j)];
            for (di, row) in stencil.iter().enumerate() {
                for (dj, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let (ii, jj) = (i + di - 1, j + dj - 1);
                    if ii == 0 || jj == 0 || ii == m1 || jj == m2 {
                        b[r] -= w * (spec.phi)(disc.x(ii), disc.y(jj), t_new);
                    } else {
                        a[r * n + idx(ii, jj)] += w;
                    }
                }
            }
        }
    }
    let x = dense_solve(a, b)?;
    let mut out = Field::zeros(m1, m2);
    for (ii, jj) in disc.boundary_nodes() {
        out[(ii, jj)] = (spec.phi)(disc.x(ii), disc.y(jj), t_new);
    }
    for i in 1..m1 {
        for j in 1..m2 {
            out[(i, j)] = x[idx(i, j)];
        }
    }
    Ok(out)
}

/// Level `n + 1` from the one-shot product operator
/// `(√μ − δx²/2√μ)(√μ − δy²/2√μ)` with the given right-hand side.
pub fn dense_factored_step(solver: &Solver, rhs: &Field) -> Result<Field> {
    let disc = solver.disc();
    let mu = solver.mu();
    // Each one-dimensional factor has dominance margin √μ per row; the
    // 9-point product itself is only dominant when μ²h1²h2² > 2.
    for h in [disc.h1(), disc.h2()] {
        let f = crate::operators::sweep_matrix(mu, h, 3);
        if !f.is_strictly_dominant() {
            return Err(Error::OracleFailure("sweep factor lost diagonal dominance".into()));
        }
    }
    let st = factored_stencil(mu, disc.h1(), disc.h2());
    dense_stencil_solve(disc, solver.spec(), &st, rhs, disc.t(solver.step_index() + 1))
}

/// Level `n + 1` of the scheme before splitting: operator `μ − ½δx² − ½δy²`.
/// `rhs` must come from [`Solver::assemble_rhs_unsplit`].
pub fn dense_unsplit_step(solver: &Solver, rhs: &Field) -> Result<Field> {
    let disc = solver.disc();
    let st = unsplit_stencil(solver.mu(), disc.h1(), disc.h2());
    let off: f64 = st.iter().flatten().map(|w| w.abs()).sum::<f64>() - st[1][1].abs();
    if !(st[1][1].abs() > off) {
        return Err(Error::OracleFailure("unsplit operator is not diagonally dominant".into()));
    }
    dense_stencil_solve(disc, solver.spec(), &st, rhs, disc.t(solver.step_index() + 1))
}

/// Full trajectory of the unsplit scheme; returns `u^N`.
pub fn run_unsplit(spec: &ProblemSpec, disc: &Discretization) -> Result<Field> {
    let mut solver = Solver::new(spec, disc)?;
    while !solver.is_finished() {
        let rhs = solver.assemble_rhs_unsplit()?;
        let next = dense_unsplit_step(&solver, &rhs)?;
        solver.advance(next)?;
    }
    Ok(solver.current().clone())
}

/// Marches the sweeps and the dense product-operator solve side by side,
/// each through its own solver, and returns the largest nodal gap over all
/// levels relative to the solution's max norm (floored at 1).
pub fn adi_dense_gap(spec: &ProblemSpec, disc: &Discretization) -> Result<f64> {
    let mut adi = Solver::new(spec, disc)?;
    let mut dense = Solver::new(spec, disc)?;
    let mut worst = 0.0f64;
    while !adi.is_finished() {
        adi.step()?;
        let rhs = dense.assemble_rhs()?;
        let next = dense_factored_step(&dense, &rhs)?;
        dense.advance(next)?;
        let scale = dense.current().values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(adi.current().max_abs_diff(dense.current()) / scale);
    }
    Ok(worst)
}

/// `max |u_ADI − u_unsplit|` at the final level.
pub fn splitting_gap(spec: &ProblemSpec, disc: &Discretization) -> Result<f64> {
    let adi = crate::stepper::run(spec, disc, None)?;
    Ok(adi.max_abs_diff(&run_unsplit(spec, disc)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementRule {
    Trapezoid,
    Midpoint,
}

const ROMBERG_TOL: f64 = 1e-13;
const ROMBERG_MAX_LEVELS: usize = 24;

/// `∫₁² p(β) dβ` by Richardson-extrapolated refinement of `rule`, stopping
/// when successive diagonal estimates agree to `1e-13`.
pub fn refined_order_integral(p: impl Fn(f64) -> f64, rule: RefinementRule) -> Result<f64> {
    let (a, b) = (1.0, 2.0);
    let mut prev_row: Vec<f64> = Vec::new();
    let mut trap = 0.5 * (b - a) * (p(a) + p(b));
    for level in 0..ROMBERG_MAX_LEVELS {
        let panels = 1usize << level;
        let h = (b - a) / panels as f64;
        let base = match rule {
            RefinementRule::Trapezoid => {
                if level > 0 {
                    // add the midpoints of the previous, twice-as-wide panels
                    let mids: f64 = (0..panels / 2).map(|m| p(a + (2 * m + 1) as f64 * h)).sum();
                    trap = 0.5 * trap + h * mids;
                }
                trap
            }
            RefinementRule::Midpoint => h * (0..panels).map(|m| p(a + (m as f64 + 0.5) * h)).sum::<f64>(),
        };
        let mut row = vec![base];
        let mut factor = 1.0;
        for (col, &prev) in prev_row.iter().enumerate() {
            factor *= 4.0;
            let next = row[col] + (row[col] - prev) / (factor - 1.0);
            row.push(next);
        }
        if level >= 2 {
            let cur = *row.last().unwrap();
            let last = *prev_row.last().unwrap();
            if (cur - last).abs() <= ROMBERG_TOL * cur.abs().max(1.0) {
                return Ok(cur);
            }
        }
        prev_row = row;
    }
    Err(Error::OracleFailure(format!("order integral did not settle within {ROMBERG_MAX_LEVELS} refinements")))
}

/// Reference value of `∫₁² p(β) dβ`.
pub fn precise_order_integral(p: impl Fn(f64) -> f64) -> Result<f64> {
    refined_order_integral(p, RefinementRule::Trapezoid)
}
