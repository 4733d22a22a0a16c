//! Error norms, observed orders and refinement studies against a known
//! solution.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Discretization, Field, ProblemSpec, Resolution};
use crate::stepper;

/// Floor under `|U|` in [`relative_error_field`].
pub const RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub inf: f64,
    pub l2: f64,
}

/// Interior max-abs error and `(h1 h2 Σ |U − u|²)^{1/2}`.
pub fn error_norms(numeric: &Field, exact: &Field, disc: &Discretization) -> Result<ErrorNorms> {
    numeric.check_shape(exact)?;
    if numeric.shape() != (disc.m1(), disc.m2()) {
        return Err(Error::ShapeMismatch {
            expected: (disc.m1() + 1, disc.m2() + 1),
            found: (numeric.shape().0 + 1, numeric.shape().1 + 1),
        });
    }
    let (mut inf, mut sq) = (0.0f64, 0.0);
    for (i, j, v) in numeric.interior() {
        let e = (v - exact[(i, j)]).abs();
        inf = inf.max(e);
        sq += e * e;
    }
    Ok(ErrorNorms { inf, l2: (sq * disc.h1() * disc.h2()).sqrt() })
}

/// `log(e_coarse / e_fine) / log(ratio)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::UndefinedOrder(format!("errors must be positive, got {e_coarse} and {e_fine}")));
    }
    if !(ratio > 1.0) {
        return Err(Error::UndefinedOrder(format!("refinement ratio {ratio} must exceed 1")));
    }
    Ok((e_coarse / e_fine).ln() / ratio.ln())
}

/// `|U − u| / max(|U|, floor)` nodewise, with `U` the numeric field.
pub fn relative_error_field(numeric: &Field, exact: &Field) -> Result<Field> {
    numeric.check_shape(exact)?;
    let (m1, m2) = numeric.shape();
    let values =
        numeric.values().iter().zip(exact.values()).map(|(u, e)| (u - e).abs() / u.abs().max(RELATIVE_FLOOR)).collect();
    Field::from_values(m1, m2, values)
}

/// Which step size the order columns are measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderBasis {
    Tau,
    H,
    Dbeta,
}

impl OrderBasis {
    /// Picks the finest-controlled parameter that changes along the rows:
    /// the mesh width if it varies, else Δβ, else τ.
    pub fn infer(rows: &[Resolution]) -> Self {
        let varies = |f: fn(&Resolution) -> usize| rows.windows(2).any(|w| f(&w[0]) != f(&w[1]));
        if varies(|r| r.m1) || varies(|r| r.m2) {
            OrderBasis::H
        } else if varies(|r| r.k) {
            OrderBasis::Dbeta
        } else {
            OrderBasis::Tau
        }
    }

    fn step(&self, d: &Discretization) -> f64 {
        match self {
            OrderBasis::Tau => d.tau(),
            OrderBasis::H => d.h1().max(d.h2()),
            OrderBasis::Dbeta => d.dbeta(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub name: String,
    pub rows: Vec<Resolution>,
    pub order_basis: OrderBasis,
}

impl Schedule {
    pub fn new(name: impl Into<String>, rows: Vec<Resolution>, order_basis: Option<OrderBasis>) -> Self {
        let order_basis = order_basis.unwrap_or_else(|| OrderBasis::infer(&rows));
        Self { name: name.into(), rows, order_basis }
    }

    /// Built-in refinement sequences for the T = 1/2 example on (0,π)².
    ///
    /// * `table1`: τ = 1/10…1/160 at h = π/500, Δβ = 1/160
    /// * `table2`: τ = 1/100, 1/400, 1/1600 with Δβ = 1/10, 1/20, 1/40 at h = π/500
    /// * `table2-full`: adds τ = 1/6400, Δβ = 1/80 (≈6 GiB of history)
    /// * `table3`: τ = 1/64…1/4096, h = π/2…π/16, Δβ = 1/8…1/64
    /// * `table3-full`: continues to τ = 1/65536, h = π/64, Δβ = 1/256
    pub fn builtin(name: &str) -> Option<Schedule> {
        let sq = Resolution::square;
        let rows: Vec<Resolution> = match name {
            "table1" => [5, 10, 20, 40, 80].iter().map(|&n| sq(500, n, 160)).collect(),
            "table2" => vec![sq(500, 50, 10), sq(500, 200, 20), sq(500, 800, 40)],
            "table2-full" => {
                vec![sq(500, 50, 10), sq(500, 200, 20), sq(500, 800, 40), sq(500, 3200, 80)]
            }
            "table3" => (0..4).map(|r| sq(2 << r, 32 << (2 * r), 8 << r)).collect(),
            "table3-full" => (0..6).map(|r| sq(2 << r, 32 << (2 * r), 8 << r)).collect(),
            _ => return None,
        };
        let basis = match name {
            "table1" => OrderBasis::Tau,
            "table2" | "table2-full" => OrderBasis::Dbeta,
            _ => OrderBasis::H,
        };
        Some(Schedule { name: name.into(), rows, order_basis: basis })
    }

    pub fn max_history_bytes(&self) -> u64 {
        self.rows.iter().map(|r| r.history_bytes()).max().unwrap_or(0)
    }

    pub fn total_history_bytes(&self) -> u64 {
        self.rows.iter().map(|r| r.history_bytes()).sum()
    }
}

pub const BUILTIN_SCHEDULES: &[&str] = &["table1", "table2", "table2-full", "table3", "table3-full"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    #[serde(flatten)]
    pub resolution: Resolution,
    pub tau: f64,
    pub h1: f64,
    pub h2: f64,
    pub dbeta: f64,
    pub error_inf: Option<f64>,
    pub error_l2: Option<f64>,
    pub order_inf: Option<f64>,
    pub order_l2: Option<f64>,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub case: String,
    pub schedule: String,
    pub order_basis: OrderBasis,
    pub norms: String,
    pub timestamp: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub metadata: StudyMetadata,
    pub rows: Vec<StudyRow>,
}

pub const CSV_HEADER: &str = "tau,h1,h2,dbeta,err_inf,order_inf,err_l2,order_l2,seconds";

impl StudyReport {
    /// CSV with the columns of [`CSV_HEADER`]; absent values are empty cells.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let line = [
                fmt17(r.tau),
                fmt17(r.h1),
                fmt17(r.h2),
                fmt17(r.dbeta),
                cell(r.error_inf),
                cell(r.order_inf),
                cell(r.error_l2),
                cell(r.order_l2),
                fmt17(r.seconds),
            ];
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Fixed-width table in the order τ, h, Δβ, L∞ error, order, L² error, order.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>, prec: usize| match v {
            Some(v) => format!("{v:.prec$}"),
            None => "-".into(),
        };
        let mut out = format!(
            "{:>12} {:>10} {:>10} {:>12} {:>8} {:>12} {:>8} {:>9}\n",
            "tau", "h", "dbeta", "err_inf", "order", "err_l2", "order", "seconds"
        );
        for r in &self.rows {
            let err = |v: Option<f64>| v.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "failed".into());
            out.push_str(&format!(
                "{:>12} {:>10} {:>10} {:>12} {:>8} {:>12} {:>8} {:>9.2}\n",
                format!("1/{}", (1.0 / r.tau).round()),
                format!("{:.5}", r.h1),
                format!("1/{}", r.resolution.k),
                err(r.error_inf),
                opt(r.order_inf, 4),
                err(r.error_l2),
                opt(r.order_l2, 4),
                r.seconds
            ));
        }
        out
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Copy, Debug)]
pub struct StudyOptions {
    /// Run rows concurrently when their combined history fits `memory_budget`.
    pub parallel: bool,
    pub memory_budget: u64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { parallel: false, memory_budget: 4 << 30 }
    }
}

struct RowOutcome {
    disc: Option<Discretization>,
    norms: std::result::Result<ErrorNorms, String>,
    seconds: f64,
}

fn solve_row(spec: &ProblemSpec, res: Resolution) -> RowOutcome {
    let start = Instant::now();
    let result = (|| {
        let disc = Discretization::new(spec, res)?;
        let u = stepper::run(spec, &disc, None)?;
        let exact = spec
            .exact_field(&disc, disc.t_final())
            .ok_or_else(|| Error::InvalidProblem(format!("case {} has no exact solution", spec.name)))?;
        Ok::<_, Error>((disc, error_norms(&u, &exact, &disc)?))
    })();
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok((disc, norms)) => RowOutcome { disc: Some(disc), norms: Ok(norms), seconds },
        Err(e) => RowOutcome { disc: Discretization::new(spec, res).ok(), norms: Err(e.to_string()), seconds },
    }
}

/// Solves every row of `schedule` and measures the final-time error against
/// the case's exact solution. A failing row is recorded and the study goes on.
pub fn run_study(spec: &ProblemSpec, schedule: &Schedule, opts: StudyOptions) -> StudyReport {
    let concurrent = opts.parallel && schedule.total_history_bytes() <= opts.memory_budget;
    let outcomes: Vec<RowOutcome> = if concurrent {
        schedule.rows.par_iter().map(|&r| solve_row(spec, r)).collect()
    } else {
        schedule.rows.iter().map(|&r| solve_row(spec, r)).collect()
    };

    let mut rows: Vec<StudyRow> = Vec::with_capacity(outcomes.len());
    for (idx, (res, out)) in schedule.rows.iter().zip(&outcomes).enumerate() {
        let steps = out.disc.map(|d| (d.tau(), d.h1(), d.h2(), d.dbeta()));
        let (tau, h1, h2, dbeta) = steps.unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        let norms = out.norms.as_ref().ok();
        let mut row = StudyRow {
            resolution: *res,
            tau,
            h1,
            h2,
            dbeta,
            error_inf: norms.map(|n| n.inf),
            error_l2: norms.map(|n| n.l2),
            order_inf: None,
            order_l2: None,
            seconds: out.seconds,
            failure: out.norms.as_ref().err().cloned(),
        };
        if idx > 0 {
            let prev = &outcomes[idx - 1];
            if let (Some(pd), Some(d), Ok(pn), Some(n)) = (prev.disc, out.disc, &prev.norms, norms) {
                let ratio = schedule.order_basis.step(&pd) / schedule.order_basis.step(&d);
                row.order_inf = observed_order(pn.inf, n.inf, ratio).ok();
                row.order_l2 = observed_order(pn.l2, n.l2, ratio).ok();
            }
        }
        rows.push(row);
    }

    StudyReport {
        metadata: StudyMetadata {
            case: spec.name.clone(),
            schedule: schedule.name.clone(),
            order_basis: schedule.order_basis,
            norms: "err_inf = max over interior nodes |U - u|; \
                    err_l2 = sqrt(h1 h2 sum over interior nodes |U - u|^2); \
                    errors at t = T; orders = log(e_prev/e)/log(step_prev/step) \
                    for the order_basis step size"
                .into(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        },
        rows,
    }
}
