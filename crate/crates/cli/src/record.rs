//! Machine-readable run output.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// What a reported number is relative to the quantity it estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Upper,
    Lower,
    Exact,
    Heuristic,
}

impl Kind {
    pub fn tag(self) -> &'static str {
        match self {
            Kind::Upper => "upper",
            Kind::Lower => "lower",
            Kind::Exact => "exact",
            Kind::Heuristic => "heuristic",
        }
    }
}

/// Label carried by every estimate of `μ` or `N_in`.
pub const BRACKETED: &str = "bracketed estimate";

#[derive(Clone, Debug, Serialize)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A flat table, also carried as CSV text inside the JSON record.
#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub csv: String,
}

impl Table {
    pub fn new(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let csv = to_csv(&header, &rows);
        Self { name: name.into(), header, rows, csv }
    }
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Shortest round-trip decimal form; `.` separator.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub inputs: serde_json::Value,
    pub scalars: Vec<Scalar>,
    pub tables: Vec<Table>,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
}

impl ResultRecord {
    pub fn new(experiment: &str, inputs: serde_json::Value) -> Self {
        Self {
            experiment: experiment.into(),
            inputs,
            scalars: Vec::new(),
            tables: Vec::new(),
            criteria: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64, kind: Kind) {
        self.scalars.push(Scalar { name: name.into(), value, kind, label: None });
    }

    /// A noise estimate; always labelled [`BRACKETED`].
    pub fn bracketed(&mut self, name: impl Into<String>, value: f64, kind: Kind) {
        self.scalars.push(Scalar { name: name.into(), value, kind, label: Some(BRACKETED.into()) });
    }

    pub fn check(&mut self, id: &str, passed: bool, detail: impl Into<String>) {
        self.criteria.push(Criterion { id: id.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record")
    }

    /// `record.json` plus one CSV per table.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("record.json"), self.to_json() + "\n")?;
        for t in &self.tables {
            fs::write(dir.join(format!("{}.csv", t.name)), &t.csv)?;
        }
        Ok(())
    }

    /// Compact human summary.
    pub fn summary(&self) -> String {
        let mut s = format!("== {} ==\n", self.experiment);
        let width = self.scalars.iter().map(|x| x.name.len()).max().unwrap_or(0);
        for x in &self.scalars {
            s += &format!("{:<width$}  {:>14.6e}  {}", x.name, x.value, x.kind.tag());
            if let Some(l) = &x.label {
                s += &format!(" ({l})");
            }
            s.push('\n');
        }
        for w in &self.warnings {
            s += &format!("warning: {w}\n");
        }
        for c in &self.criteria {
            s += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail);
        }
        s
    }
}
