//! Field CSV and run-summary JSON.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dowave::analysis::{fmt17, relative_error_field, ErrorNorms};
use dowave::model::{Discretization, Field};
use serde::Serialize;

pub const FIELD_COLUMNS: [&str; 3] = ["x", "y", "u_numeric"];
pub const ERROR_COLUMNS: [&str; 3] = ["u_exact", "abs_err", "rel_err"];

/// Renders every node as `x,y,u_numeric[,u_exact,abs_err,rel_err]`, with `i`
/// (the x index) outermost, at 17 significant digits.
pub fn field_csv(disc: &Discretization, numeric: &Field, exact: Option<&Field>) -> Result<String> {
    let mut header: Vec<&str> = FIELD_COLUMNS.to_vec();
    let rel = match exact {
        Some(e) => {
            header.extend(ERROR_COLUMNS);
            Some(relative_error_field(numeric, e)?)
        }
        None => None,
    };
    let mut out = header.join(",");
    out.push('\n');
    let (m1, m2) = numeric.shape();
    for i in 0..=m1 {
        for j in 0..=m2 {
            let u = numeric[(i, j)];
            write!(out, "{},{},{}", fmt17(disc.x(i)), fmt17(disc.y(j)), fmt17(u))?;
            if let (Some(e), Some(r)) = (exact, rel.as_ref()) {
                let ue = e[(i, j)];
                write!(out, ",{},{},{}", fmt17(ue), fmt17((u - ue).abs()), fmt17(r[(i, j)]))?;
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Columns and numeric rows of a CSV written by [`field_csv`] or a study report.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines();
    let columns: Vec<String> = match lines.next() {
        Some(h) => h.split(',').map(str::to_string).collect(),
        None => bail!("empty CSV"),
    };
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<Option<f64>> = line
            .split(',')
            .map(|c| if c.is_empty() { Ok(None) } else { c.parse::<f64>().map(Some) })
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("line {}: not a number", n + 2))?;
        if cells.len() != columns.len() {
            bail!("line {}: {} cells for {} columns", n + 2, cells.len(), columns.len());
        }
        rows.push(cells);
    }
    Ok(CsvTable { columns, rows })
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_csv(&text)
}

#[derive(Debug, Serialize)]
pub struct Parameters {
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub l1: f64,
    pub l2: f64,
    pub t_final: f64,
    pub h1: f64,
    pub h2: f64,
    pub tau: f64,
    pub dbeta: f64,
}

impl Parameters {
    pub fn of(disc: &Discretization) -> Self {
        Self {
            m1: disc.m1(),
            m2: disc.m2(),
            n: disc.n(),
            k: disc.k(),
            l1: disc.l1(),
            l2: disc.l2(),
            t_final: disc.t_final(),
            h1: disc.h1(),
            h2: disc.h2(),
            tau: disc.tau(),
            dbeta: disc.dbeta(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub case: String,
    pub parameters: Parameters,
    pub mu: f64,
    /// Interior error norms at `t_final`, absent without an exact solution.
    pub err_inf: Option<f64>,
    pub err_l2: Option<f64>,
    pub wall_seconds: f64,
    pub threads: usize,
    pub version: &'static str,
}

impl RunSummary {
    pub fn set_norms(&mut self, norms: Option<ErrorNorms>) {
        self.err_inf = norms.map(|n| n.inf);
        self.err_l2 = norms.map(|n| n.l2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dowave::model::Resolution;
    use proptest::prelude::*;

    fn disc(m1: usize, m2: usize) -> Discretization {
        Discretization::with_domain(1.7, std::f64::consts::PI, 0.5, Resolution::new(m1, m2, 1, 1)).unwrap()
    }

    #[test]
    fn columns_with_and_without_exact() {
        let d = disc(2, 3);
        let u = Field::from_fn(&d, |x, y| x + y);
        let plain = parse_csv(&field_csv(&d, &u, None).unwrap()).unwrap();
        assert_eq!(plain.columns, FIELD_COLUMNS);
        assert_eq!(plain.rows.len(), 12);
        let e = Field::from_fn(&d, |x, y| x + y + 0.5);
        let full = parse_csv(&field_csv(&d, &u, Some(&e)).unwrap()).unwrap();
        assert_eq!(full.columns.len(), 6);
        let abs = full.column("abs_err").unwrap();
        assert!(abs.iter().all(|v| (v.unwrap() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n1,x\n").is_err());
        assert!(parse_csv("a,b\n1\n").is_err());
        assert_eq!(parse_csv("a,b\n1,\n").unwrap().rows[0], vec![Some(1.0), None]);
    }

    proptest! {
        #[test]
        fn field_round_trips(m1 in 2usize..9, m2 in 2usize..9,
                             vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 100)) {
            let d = disc(m1, m2);
            let u = Field::from_values(m1, m2, vals[..(m1 + 1) * (m2 + 1)].to_vec()).unwrap();
            let table = parse_csv(&field_csv(&d, &u, None).unwrap()).unwrap();
            let back: Vec<f64> = table.column("u_numeric").unwrap().into_iter().map(Option::unwrap).collect();
            prop_assert_eq!(back.as_slice(), u.values());
            let xs = table.column("x").unwrap();
            for (k, x) in xs.iter().enumerate() {
                prop_assert_eq!(x.unwrap(), d.x(k / (m2 + 1)));
            }
        }
    }
}
