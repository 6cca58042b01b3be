//! Comparison of produced tables with golden reference tables.
//!
//! A golden file is a CSV table like the produced ones. Metadata lines select
//! the table and the tolerance:
//!
//! ```text
//! # table=table3
//! # tolerance=ratio:2          (or abs:1e-6)
//! # tolerance.eps_c1=abs:1e-9  (per-column override)
//! ```
//!
//! Rows are matched on the first column; every numeric golden entry must have a
//! counterpart within tolerance.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use bjlab::verify::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Abs(f64),
    /// Same sign and `1/f ≤ value/golden ≤ f`.
    Ratio(f64),
}

impl FromStr for Tolerance {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, v) = s.split_once(':').ok_or_else(|| anyhow!("tolerance {s:?} is not kind:value"))?;
        let v: f64 = v.trim().parse().map_err(|e| anyhow!("tolerance {s:?}: {e}"))?;
        match kind.trim() {
            "abs" if v >= 0.0 => Ok(Tolerance::Abs(v)),
            "ratio" if v >= 1.0 => Ok(Tolerance::Ratio(v)),
            _ => bail!("bad tolerance {s:?}"),
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Abs(v) => write!(f, "abs:{v:e}"),
            Tolerance::Ratio(v) => write!(f, "ratio:{v}"),
        }
    }
}

impl Tolerance {
    pub fn accepts(&self, value: f64, golden: f64) -> bool {
        match *self {
            Tolerance::Abs(t) => (value - golden).abs() <= t,
            Tolerance::Ratio(f) => {
                if golden == 0.0 {
                    return value == 0.0;
                }
                let r = value / golden;
                r > 0.0 && r <= f && r >= 1.0 / f
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    Pass { key: String, column: String, value: f64, golden: f64 },
    Fail { key: String, column: String, value: f64, golden: f64, tol: Tolerance },
    Missing { key: String, column: Option<String> },
}

impl Finding {
    pub fn ok(&self) -> bool {
        matches!(self, Finding::Pass { .. })
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::Pass { key, column, value, golden } => {
                write!(f, "ok    {key} {column}: {value:.6e} (golden {golden:.6e})")
            }
            Finding::Fail { key, column, value, golden, tol } => {
                write!(f, "FAIL  {key} {column}: {value:.6e} vs golden {golden:.6e} ({tol})")
            }
            Finding::Missing { key, column: Some(c) } => write!(f, "MISS  {key} {c}: no value produced"),
            Finding::Missing { key, column: None } => write!(f, "MISS  {key}: row not produced"),
        }
    }
}

fn meta<'a>(t: &'a CsvTable, key: &str) -> Option<&'a str> {
    t.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Picks the produced table the golden file refers to: by its `table` entry,
/// else the only table with the golden's key column and all value columns.
pub fn select<'a>(golden: &CsvTable, tables: &'a [(String, CsvTable)]) -> Result<&'a (String, CsvTable)> {
    if let Some(name) = meta(golden, "table") {
        return tables
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| anyhow!("golden file refers to table {name:?}, which this campaign does not produce"));
    }
    let fits: Vec<_> = tables
        .iter()
        .filter(|(_, t)| golden.header.iter().all(|h| t.column(h).is_some()) && t.header[0] == golden.header[0])
        .collect();
    match fits.as_slice() {
        [one] => Ok(one),
        [] => bail!("no produced table has the golden columns {:?}", golden.header),
        _ => bail!("golden columns match several tables; add a `# table=` line"),
    }
}

pub fn compare(golden: &CsvTable, produced: &CsvTable) -> Result<Vec<Finding>> {
    let default: Tolerance = meta(golden, "tolerance").unwrap_or("ratio:2").parse()?;
    let key_col = &golden.header[0];
    let pk = produced
        .column(key_col)
        .ok_or_else(|| anyhow!("produced table has no key column {key_col:?}"))?;
    let mut out = Vec::new();
    for row in &golden.rows {
        let key = &row[0];
        let Some(prow) = produced.rows.iter().find(|r| &r[pk] == key) else {
            out.push(Finding::Missing {
                key: key.clone(),
                column: None,
            });
            continue;
        };
        for (j, col) in golden.header.iter().enumerate().skip(1) {
            let Ok(g) = row[j].parse::<f64>() else {
                continue; // "-" or text: nothing to check
            };
            let tol = match meta(golden, &format!("tolerance.{col}")) {
                Some(s) => s.parse()?,
                None => default,
            };
            let value = produced.column(col).and_then(|c| prow[c].parse::<f64>().ok());
            out.push(match value {
                None => Finding::Missing {
                    key: key.clone(),
                    column: Some(col.clone()),
                },
                Some(v) if tol.accepts(v, g) => Finding::Pass {
                    key: key.clone(),
                    column: col.clone(),
                    value: v,
                    golden: g,
                },
                Some(v) => Finding::Fail {
                    key: key.clone(),
                    column: col.clone(),
                    value: v,
                    golden: g,
                    tol,
                },
            });
        }
    }
    Ok(out)
}
