//! Time marching for the factored scheme
//!
//! ```text
//! (√μ − δx²/2√μ)(√μ − δy²/2√μ) u^{n+1}
//!     = (√μ + δx²/2√μ)(√μ + δy²/2√μ) u^n + Σ_{k=1}^{n} W_{n+1−k} (u^k − u^{k−1})
//!       + s_{n+1} ψ2 + f(·, ·, t_n, u^n)
//! ```
//!
//! solved as an x-sweep for the intermediate `u* = (√μ − δy²/2√μ) u^{n+1}`
//! followed by a y-sweep. The source is taken explicitly from the previous
//! level, so every step is linear.

use rayon::prelude::*;

use crate::coefficients::CoefficientTable;
use crate::error::{Error, Result};
use crate::model::{Discretization, Field, ProblemSpec};
use crate::operators::{sweep_matrix, ThomasFactorization};

/// Interior nodes per parallel work item in the history reduction.
const HISTORY_CHUNK: usize = 2048;

/// Append-only store of interior difference fields `d^k = u^k − u^{k−1}`.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    interior_len: usize,
    data: Vec<f64>,
}

impl HistoryBuffer {
    /// Reserves room for `steps` levels up front so the buffer never
    /// reallocates mid-run.
    pub fn with_capacity(interior_len: usize, steps: usize) -> Result<Self> {
        let mut data = Vec::new();
        let count = interior_len * steps;
        data.try_reserve_exact(count)
            .map_err(|_| Error::HistoryAllocation { bytes: (count * std::mem::size_of::<f64>()) as u64 })?;
        Ok(Self { interior_len, data })
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.interior_len).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `d^k`, `k` counted from 1.
    pub fn get(&self, k: usize) -> &[f64] {
        let start = (k - 1) * self.interior_len;
        &self.data[start..start + self.interior_len]
    }

    pub fn push(&mut self, diff: &[f64]) {
        assert_eq!(diff.len(), self.interior_len);
        self.data.extend_from_slice(diff);
    }
}

/// State of one run: the current level `u^n`, all past differences and the
/// precomputed coefficients.
pub struct Solver {
    spec: ProblemSpec,
    disc: Discretization,
    table: CoefficientTable,
    step: usize,
    current: Field,
    history: HistoryBuffer,
    psi2: Vec<f64>,
    x_sweep: ThomasFactorization,
    y_sweep: ThomasFactorization,
}

impl Solver {
    /// Level 0: ψ1 inside, φ(·,·,0) on the boundary.
    pub fn new(spec: &ProblemSpec, disc: &Discretization) -> Result<Self> {
        spec.validate(disc)?;
        let table = CoefficientTable::build(spec, disc)?;
        let (m1, m2) = (disc.m1(), disc.m2());
        let mut current = Field::zeros(m1, m2);
        for i in 0..=m1 {
            for j in 0..=m2 {
                let (x, y) = (disc.x(i), disc.y(j));
                current[(i, j)] =
                    if i == 0 || j == 0 || i == m1 || j == m2 { (spec.phi)(x, y, 0.0) } else { (spec.psi1)(x, y) };
            }
        }
        let psi2 = (1..m1)
            .flat_map(|i| (1..m2).map(move |j| (i, j)))
            .map(|(i, j)| (spec.psi2)(disc.x(i), disc.y(j)))
            .collect();
        let mu = table.mu();
        let xs = sweep_matrix(mu, disc.h1(), m1 - 1);
        let ys = sweep_matrix(mu, disc.h2(), m2 - 1);
        let out = Self {
            spec: spec.clone(),
            disc: *disc,
            step: 0,
            current,
            history: HistoryBuffer::with_capacity(disc.interior_len(), disc.n())?,
            psi2,
            x_sweep: ThomasFactorization::new(&xs.lower, &xs.diag, &xs.upper)?,
            y_sweep: ThomasFactorization::new(&ys.lower, &ys.diag, &ys.upper)?,
            table,
        };
        Ok(out)
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn mu(&self) -> f64 {
        self.table.mu()
    }

    /// Index `n` of the current level.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.disc.t(self.step)
    }

    pub fn current(&self) -> &Field {
        &self.current
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.disc.n()
    }

    /// Right-hand side of the factored system for level `n + 1`, on interior
    /// nodes.
    pub fn assemble_rhs(&self) -> Result<Field> {
        self.rhs_field(true)
    }

    /// As [`Solver::assemble_rhs`] without the `(1/4μ) δx²δy² u^n` term, i.e.
    /// the right-hand side of the scheme before operator splitting.
    pub fn assemble_rhs_unsplit(&self) -> Result<Field> {
        self.rhs_field(false)
    }

    fn rhs_field(&self, split: bool) -> Result<Field> {
        let interior = self.rhs_interior(split)?;
        Ok(self.interior_to_field(&interior))
    }

    fn rhs_interior(&self, split: bool) -> Result<Vec<f64>> {
        if self.is_finished() {
            return Err(Error::InvalidDiscretization(format!(
                "no level after n = {} (N = {})",
                self.step,
                self.disc.n()
            )));
        }
        let n = self.step;
        let (m1, m2) = (self.disc.m1(), self.disc.m2());
        let (h1, h2) = (self.disc.h1(), self.disc.h2());
        let mu = self.mu();
        let quarter_inv_mu = if split { 0.25 / mu } else { 0.0 };
        let s_next = self.table.s(n + 1);
        let t_n = self.disc.t(n);
        let u = &self.current;
        let spec = &self.spec;
        let disc = &self.disc;
        let inv_h1 = 1.0 / (h1 * h1);
        let inv_h2 = 1.0 / (h2 * h2);
        let inv_h12 = inv_h1 * inv_h2;
        let cols = m2 - 1;

        let mut rhs = vec![0.0; disc.interior_len()];
        rhs.par_chunks_mut(cols).enumerate().for_each(|(r, row)| {
            let i = r + 1;
            let x = disc.x(i);
            let dyy = |ii: usize, j: usize| u[(ii, j - 1)] - 2.0 * u[(ii, j)] + u[(ii, j + 1)];
            for (c, out) in row.iter_mut().enumerate() {
                let j = c + 1;
                let v = u[(i, j)];
                let dxx = (u[(i - 1, j)] - 2.0 * v + u[(i + 1, j)]) * inv_h1;
                let dy = dyy(i, j);
                let mixed = (dyy(i - 1, j) - 2.0 * dy + dyy(i + 1, j)) * inv_h12;
                *out = mu * v
                    + 0.5 * dxx
                    + 0.5 * dy * inv_h2
                    + quarter_inv_mu * mixed
                    + s_next * self.psi2[r * cols + c]
                    + (spec.source)(x, disc.y(j), t_n, v);
            }
        });

        if n > 0 {
            // Σ_{k=1}^{n} W_{n+1−k} d^k, k ascending at every node.
            let weights = self.table.weights();
            let history = &self.history;
            rhs.par_chunks_mut(HISTORY_CHUNK).enumerate().for_each(|(c, chunk)| {
                let off = c * HISTORY_CHUNK;
                for k in 1..=n {
                    let w = weights[n - k];
                    let d = &history.get(k)[off..off + chunk.len()];
                    for (acc, dv) in chunk.iter_mut().zip(d) {
                        *acc += w * dv;
                    }
                }
            });
        }
        debug_assert!(m1 >= 2);
        Ok(rhs)
    }

    /// Boundary values `u*_{0j}`, `u*_{M1,j}` from φ at the new level.
    fn intermediate_boundary(&self, i: usize, t_new: f64) -> Vec<f64> {
        let disc = &self.disc;
        let sqrt_mu = self.mu().sqrt();
        let inv_h2 = 1.0 / (disc.h2() * disc.h2());
        let x = disc.x(i);
        let phi = |j: usize| (self.spec.phi)(x, disc.y(j), t_new);
        (1..disc.m2())
            .map(|j| {
                let dyy = (phi(j - 1) - 2.0 * phi(j) + phi(j + 1)) * inv_h2;
                sqrt_mu * phi(j) - dyy / (2.0 * sqrt_mu)
            })
            .collect()
    }

    /// Solves `(√μ − δx²/2√μ) u* = rhs` line by line in `x`.
    pub fn x_sweep(&self, rhs: &Field) -> Result<Field> {
        let (m1, m2) = (self.disc.m1(), self.disc.m2());
        self.current.check_shape(rhs)?;
        let t_new = self.disc.t(self.step + 1);
        let left = self.intermediate_boundary(0, t_new);
        let right = self.intermediate_boundary(m1, t_new);
        let off = -1.0 / (2.0 * self.mu().sqrt() * self.disc.h1() * self.disc.h1());

        let lines: Vec<Vec<f64>> = (1..m2)
            .into_par_iter()
            .map(|j| {
                let mut line: Vec<f64> = (1..m1).map(|i| rhs[(i, j)]).collect();
                line[0] -= off * left[j - 1];
                let last = line.len() - 1;
                line[last] -= off * right[j - 1];
                self.x_sweep.solve_in_place(&mut line);
                line
            })
            .collect();

        let mut ustar = Field::zeros(m1, m2);
        for (jj, line) in lines.iter().enumerate() {
            let j = jj + 1;
            ustar[(0, j)] = left[jj];
            ustar[(m1, j)] = right[jj];
            for (ii, v) in line.iter().enumerate() {
                ustar[(ii + 1, j)] = *v;
            }
        }
        check_finite(&ustar)?;
        Ok(ustar)
    }

    /// Solves `(√μ − δy²/2√μ) u^{n+1} = u*` line by line in `y`, then
    /// advances to level `n + 1`.
    pub fn y_sweep(&mut self, ustar: &Field) -> Result<()> {
        let next = self.y_solve(ustar)?;
        self.advance(next)
    }

    fn y_solve(&self, ustar: &Field) -> Result<Field> {
        let (m1, m2) = (self.disc.m1(), self.disc.m2());
        self.current.check_shape(ustar)?;
        let t_new = self.disc.t(self.step + 1);
        let off = -1.0 / (2.0 * self.mu().sqrt() * self.disc.h2() * self.disc.h2());
        let phi = &self.spec.phi;
        let disc = &self.disc;

        let mut next = self.boundary_field(t_new);
        let stride = next.stride();
        next.values_mut().par_chunks_mut(stride).enumerate().filter(|(i, _)| *i >= 1 && *i < m1).for_each(
            |(i, row)| {
                let x = disc.x(i);
                let mut line: Vec<f64> = (1..m2).map(|j| ustar[(i, j)]).collect();
                line[0] -= off * phi(x, disc.y(0), t_new);
                let last = line.len() - 1;
                line[last] -= off * phi(x, disc.y(m2), t_new);
                self.y_sweep.solve_in_place(&mut line);
                row[1..m2].copy_from_slice(&line);
            },
        );
        check_finite(&next)?;
        Ok(next)
    }

    /// Field that is φ(·,·,t) on the boundary and zero inside.
    fn boundary_field(&self, t: f64) -> Field {
        let mut out = Field::zeros(self.disc.m1(), self.disc.m2());
        for (i, j) in self.disc.boundary_nodes() {
            out[(i, j)] = (self.spec.phi)(self.disc.x(i), self.disc.y(j), t);
        }
        out
    }

    /// Accepts `next` as level `n + 1`: its interior is kept, its boundary is
    /// reset to φ at `t_{n+1}`, and the difference joins the history.
    ///
    /// The sweeps call this; the dense oracles use it to march their own
    /// trajectories through the same history logic.
    pub fn advance(&mut self, next: Field) -> Result<()> {
        self.current.check_shape(&next)?;
        if self.is_finished() {
            return Err(Error::InvalidDiscretization("already at the final level".into()));
        }
        let t_new = self.disc.t(self.step + 1);
        let mut next = next;
        for (i, j) in self.disc.boundary_nodes() {
            next[(i, j)] = (self.spec.phi)(self.disc.x(i), self.disc.y(j), t_new);
        }
        let diff: Vec<f64> = next.interior().map(|(i, j, v)| v - self.current[(i, j)]).collect();
        self.history.push(&diff);
        self.current = next;
        self.step += 1;
        Ok(())
    }

    /// One full ADI step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.step + 1;
        let wrap = |e| Error::Step { step: n, source: Box::new(e) };
        let rhs = self.assemble_rhs().map_err(wrap)?;
        let ustar = self.x_sweep(&rhs).map_err(wrap)?;
        self.y_sweep(&ustar).map_err(wrap)
    }

    pub(crate) fn interior_to_field(&self, interior: &[f64]) -> Field {
        let (m1, m2) = (self.disc.m1(), self.disc.m2());
        let mut out = Field::zeros(m1, m2);
        let cols = m2 - 1;
        for i in 1..m1 {
            for j in 1..m2 {
                out[(i, j)] = interior[(i - 1) * cols + (j - 1)];
            }
        }
        out
    }
}

fn check_finite(f: &Field) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidProblem("non-finite value produced".into()))
    }
}

/// Callback receiving `(n, t_n, u^n)` after every step.
pub type Observer<'a> = &'a mut dyn FnMut(usize, f64, &Field);

/// Runs all `N` steps and returns `u^N`.
pub fn run(spec: &ProblemSpec, disc: &Discretization, observer: Option<Observer<'_>>) -> Result<Field> {
    let mut solver = Solver::new(spec, disc)?;
    let mut observer = observer;
    while !solver.is_finished() {
        solver.step()?;
        if let Some(obs) = observer.as_mut() {
            obs(solver.step_index(), solver.time(), solver.current());
        }
    }
    Ok(solver.current)
}

/// `(μ − ½δx² − ½δy² + (1/4μ)δx²δy²) u` at interior nodes, the expanded form
/// of the factored left-hand operator.
pub fn apply_factored_operator(u: &Field, mu: f64, h1: f64, h2: f64) -> Field {
    let dxx = crate::operators::apply_dxx(u, h1);
    let dyy = crate::operators::apply_dyy(u, h2);
    let mixed = crate::operators::apply_dxxdyy(u, h1, h2);
    let (m1, m2) = u.shape();
    let mut out = Field::zeros(m1, m2);
    for i in 1..m1 {
        for j in 1..m2 {
            out[(i, j)] = mu * u[(i, j)] - 0.5 * dxx[(i, j)] - 0.5 * dyy[(i, j)] + 0.25 / mu * mixed[(i, j)];
        }
    }
    out
}
