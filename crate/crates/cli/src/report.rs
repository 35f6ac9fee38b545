//! Run reports: result tables (CSV) and the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

/// One CSV file. Cells are preformatted so output is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// Shortest round-trip formatting, scientific outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub residual: Option<f64>,
    pub seconds: f64,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        CheckRow {
            name: name.into(),
            passed,
            lower: None,
            upper: None,
            residual: None,
            seconds: 0.0,
        }
    }

    /// `lower ≤ upper` up to a relative slack for rounding.
    pub fn bound(name: impl Into<String>, lower: f64, upper: f64, seconds: f64) -> Self {
        CheckRow {
            name: name.into(),
            passed: lower <= upper * (1.0 + 1e-12),
            lower: Some(lower),
            upper: Some(upper),
            residual: None,
            seconds,
        }
    }

    /// `residual < threshold`.
    pub fn residual(name: impl Into<String>, residual: f64, threshold: f64, seconds: f64) -> Self {
        CheckRow {
            name: name.into(),
            passed: residual < threshold,
            lower: None,
            upper: Some(threshold),
            residual: Some(residual),
            seconds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: String,
    pub seed: u64,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckRow>,
    pub extra: Value,
    pub seconds: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Check rows without timings, for the deterministic CSV.
    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["name", "status", "lower", "upper", "residual"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                if c.passed { "pass" } else { "fail" }.to_string(),
                opt_num(c.lower),
                opt_num(c.upper),
                opt_num(c.residual),
            ]);
        }
        t
    }

    pub fn summary(&self, config: &Value) -> Value {
        json!({
            "schema": SCHEMA,
            "kind": self.kind,
            "seed": self.seed,
            "status": if self.passed() { "pass" } else { "fail" },
            "checks_total": self.checks.len(),
            "checks_failed": self.failures(),
            "seconds": self.seconds,
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).chain(["checks.csv".to_string()]).collect::<Vec<_>>(),
            "checks": self.checks,
            "details": self.extra,
            "config": config,
        })
    }

    /// Writes every table, `checks.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path, config: &Value) -> Result<Vec<PathBuf>, CliError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        for table in self.tables.iter().chain(std::iter::once(&self.checks_table())) {
            let path = dir.join(format!("{}.csv", table.name));
            fs::write(&path, table.to_csv()?).map_err(io(&path))?;
            written.push(path);
        }
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&self.summary(config)).expect("summary serializes");
        fs::write(&path, text + "\n").map_err(io(&path))?;
        written.push(path);
        Ok(written)
    }
}
