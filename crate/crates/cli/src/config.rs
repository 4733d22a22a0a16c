//! TOML run configuration.
//!
//! ```toml
//! case = "example1"            # or a table, see below
//! M1 = 16
//! M2 = 16
//! N = 2048
//! K = 64
//! memory_budget_gib = 4        # optional
//!
//! [output]                     # optional, all default to true
//! field = true
//! summary = true
//! ```
//!
//! `case` may also be `{ name = "constant", value = 2.5 }` or an inline
//! definition under `[case.inline]` with expression strings for `weight`
//! (in `beta`), `psi1`, `psi2` (in `x, y`), `phi`, `exact` (in `x, y, t`) and
//! `source` (in `x, y, t, u`), plus `l1`, `l2`, `t_final`.
//!
//! Studies replace `M1 … K` with `schedule`, either a built-in name or an
//! array of `{ M1, M2, N, K }` tables, and may set `order_basis` and
//! `parallel`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use dowave::analysis::{OrderBasis, Schedule, BUILTIN_SCHEDULES};
use dowave::model::{builtin_case, ProblemSpec, Resolution, BUILTIN_CASES};
use serde::Deserialize;

use crate::expr::{Expr, Signature};

const GIB: f64 = (1u64 << 30) as f64;
pub const DEFAULT_MEMORY_BUDGET_GIB: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    case: Option<toml::Value>,
    #[serde(rename = "M1")]
    m1: Option<i64>,
    #[serde(rename = "M2")]
    m2: Option<i64>,
    #[serde(rename = "N")]
    n: Option<i64>,
    #[serde(rename = "K")]
    k: Option<i64>,
    schedule: Option<toml::Value>,
    order_basis: Option<OrderBasis>,
    memory_budget_gib: Option<f64>,
    parallel: Option<bool>,
    #[serde(default)]
    output: OutputOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    /// `field.csv` (solve)
    pub field: bool,
    /// `summary.json` (solve)
    pub summary: bool,
    /// `report.json` (study)
    pub report_json: bool,
    /// `report.csv` (study)
    pub report_csv: bool,
    /// Study table on standard output.
    pub table: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { field: true, summary: true, report_json: true, report_csv: true, table: true }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseTable {
    name: Option<String>,
    value: Option<f64>,
    inline: Option<InlineCase>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Int(i64),
    Expr(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineCase {
    name: Option<String>,
    weight: String,
    l1: Number,
    l2: Number,
    t_final: Number,
    psi1: String,
    psi2: String,
    phi: String,
    source: String,
    exact: Option<String>,
    lipschitz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    #[serde(rename = "M1")]
    m1: i64,
    #[serde(rename = "M2")]
    m2: i64,
    #[serde(rename = "N")]
    n: i64,
    #[serde(rename = "K")]
    k: i64,
}

#[derive(Debug)]
pub struct SolveJob {
    pub spec: ProblemSpec,
    pub resolution: Resolution,
    pub memory_budget: u64,
    pub output: OutputOptions,
}

#[derive(Debug)]
pub struct StudyJob {
    pub spec: ProblemSpec,
    pub schedule: Schedule,
    pub memory_budget: u64,
    pub parallel: bool,
    pub output: OutputOptions,
}

pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
}

fn count(key: &str, v: Option<i64>, min: i64) -> Result<usize, ConfigError> {
    match v {
        None => err(format!("missing key `{key}`")),
        Some(v) if v < min => err(format!("key `{key}` must be at least {min}, got {v}")),
        Some(v) => Ok(v as usize),
    }
}

fn row(m1: i64, m2: i64, n: i64, k: i64, at: &str) -> Result<Resolution, ConfigError> {
    let check = |key: &str, v: i64, min: i64| {
        if v < min {
            err(format!("key `{at}{key}` must be at least {min}, got {v}"))
        } else {
            Ok(v as usize)
        }
    };
    Ok(Resolution::new(check("M1", m1, 2)?, check("M2", m2, 2)?, check("N", n, 1)?, check("K", k, 1)?))
}

impl RawConfig {
    fn budget(&self) -> Result<u64, ConfigError> {
        let gib = self.memory_budget_gib.unwrap_or(DEFAULT_MEMORY_BUDGET_GIB);
        if !(gib.is_finite() && gib > 0.0) {
            return err(format!("key `memory_budget_gib` must be positive, got {gib}"));
        }
        Ok((gib * GIB) as u64)
    }

    fn reject(&self, present: bool, key: &str, command: &str) -> Result<(), ConfigError> {
        if present {
            err(format!("key `{key}` is not used by `{command}`"))
        } else {
            Ok(())
        }
    }

    pub fn solve_job(self) -> Result<SolveJob, ConfigError> {
        self.reject(self.schedule.is_some(), "schedule", "solve")?;
        self.reject(self.order_basis.is_some(), "order_basis", "solve")?;
        self.reject(self.parallel.is_some(), "parallel", "solve")?;
        let spec = resolve_case(self.case.as_ref())?;
        let resolution = Resolution::new(
            count("M1", self.m1, 2)?,
            count("M2", self.m2, 2)?,
            count("N", self.n, 1)?,
            count("K", self.k, 1)?,
        );
        Ok(SolveJob { spec, resolution, memory_budget: self.budget()?, output: self.output })
    }

    pub fn study_job(self) -> Result<StudyJob, ConfigError> {
        for (key, v) in [("M1", self.m1), ("M2", self.m2), ("N", self.n), ("K", self.k)] {
            if v.is_some() {
                return err(format!("key `{key}` is not used by `study`; list resolutions under `schedule`"));
            }
        }
        let spec = resolve_case(self.case.as_ref())?;
        let schedule = match &self.schedule {
            None => return err("missing key `schedule`"),
            Some(toml::Value::String(name)) => {
                let mut s = Schedule::builtin(name).ok_or_else(|| {
                    ConfigError(format!(
                        "key `schedule`: unknown schedule `{name}` (built-in: {})",
                        BUILTIN_SCHEDULES.join(", ")
                    ))
                })?;
                if let Some(b) = self.order_basis {
                    s.order_basis = b;
                }
                s
            }
            Some(toml::Value::Array(rows)) => {
                if rows.is_empty() {
                    return err("key `schedule` is empty");
                }
                let rows = rows
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let r = RawRow::deserialize(v.clone())
                            .map_err(|e| ConfigError(format!("key `schedule[{i}]`: {e}")))?;
                        row(r.m1, r.m2, r.n, r.k, &format!("schedule[{i}]."))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Schedule::new("custom", rows, self.order_basis)
            }
            Some(_) => return err("key `schedule` must be a schedule name or an array of {M1, M2, N, K} tables"),
        };
        Ok(StudyJob {
            spec,
            schedule,
            memory_budget: self.budget()?,
            parallel: self.parallel.unwrap_or(false),
            output: self.output,
        })
    }
}

fn resolve_case(case: Option<&toml::Value>) -> Result<ProblemSpec, ConfigError> {
    let unknown =
        |name: &str| ConfigError(format!("key `case`: unknown case `{name}` (built-in: {})", BUILTIN_CASES.join(", ")));
    match case {
        None => err("missing key `case`"),
        Some(toml::Value::String(name)) => builtin_case(name, None).ok_or_else(|| unknown(name)),
        Some(v @ toml::Value::Table(_)) => {
            let t = CaseTable::deserialize(v.clone()).map_err(|e| ConfigError(format!("key `case`: {e}")))?;
            match (t.name, t.inline) {
                (Some(_), Some(_)) => err("key `case`: give either `name` or `inline`, not both"),
                (Some(name), None) => builtin_case(&name, t.value).ok_or_else(|| unknown(&name)),
                (None, Some(inline)) => {
                    if t.value.is_some() {
                        return err("key `case.value` only applies to built-in cases");
                    }
                    inline_case(inline)
                }
                (None, None) => err("key `case` needs `name` or `inline`"),
            }
        }
        Some(_) => err("key `case` must be a case name or a table"),
    }
}

fn number(key: &str, n: &Number) -> Result<f64, ConfigError> {
    let v = match n {
        Number::Float(v) => *v,
        Number::Int(v) => *v as f64,
        Number::Expr(s) => Expr::parse(s, Signature::Constant)
            .map_err(|e| ConfigError(format!("key `case.inline.{key}`: {e}")))?
            .eval(&[]),
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        err(format!("key `case.inline.{key}` must be positive, got {v}"))
    }
}

fn inline_case(c: InlineCase) -> Result<ProblemSpec, ConfigError> {
    let parse = |key: &str, src: &str, sig: Signature| {
        Expr::parse(src, sig).map_err(|e| ConfigError(format!("key `case.inline.{key}`: {e}")))
    };
    let weight = parse("weight", &c.weight, Signature::Order)?;
    let psi1 = parse("psi1", &c.psi1, Signature::Space)?;
    let psi2 = parse("psi2", &c.psi2, Signature::Space)?;
    let phi = parse("phi", &c.phi, Signature::SpaceTime)?;
    let source = parse("source", &c.source, Signature::Source)?;
    let exact = c.exact.as_deref().map(|s| parse("exact", s, Signature::SpaceTime)).transpose()?;
    Ok(ProblemSpec {
        name: c.name.unwrap_or_else(|| "inline".into()),
        weight: Arc::new(move |b| weight.eval(&[b])),
        l1: number("l1", &c.l1)?,
        l2: number("l2", &c.l2)?,
        t_final: number("t_final", &c.t_final)?,
        psi1: Arc::new(move |x, y| psi1.eval(&[x, y])),
        psi2: Arc::new(move |x, y| psi2.eval(&[x, y])),
        phi: Arc::new(move |x, y, t| phi.eval(&[x, y, t])),
        source: Arc::new(move |x, y, t, u| source.eval(&[x, y, t, u])),
        lipschitz: c.lipschitz.unwrap_or(f64::NAN),
        exact: exact.map(|e| Arc::new(move |x, y, t| e.eval(&[x, y, t])) as _),
    })
}

/// Refuses runs whose history buffer would exceed `budget` bytes.
pub fn check_memory(what: &str, res: Resolution, bytes: u64, budget: u64) -> Result<(), ConfigError> {
    if bytes <= budget {
        return Ok(());
    }
    err(format!(
        "{what} needs a history buffer of N*(M1-1)*(M2-1)*8 = {}*{}*{}*8 bytes = {:.2} GiB, \
         over the memory budget of {:.2} GiB; raise `memory_budget_gib` to run it anyway",
        res.n,
        res.m1 - 1,
        res.m2 - 1,
        bytes as f64 / GIB,
        budget as f64 / GIB
    ))
}
