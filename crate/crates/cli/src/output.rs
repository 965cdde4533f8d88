//! Deterministic artifact writers: CSV tables and the machine-readable
//! verdict file. No timestamps or machine identifiers ever enter the
//! outputs, so identical configs and seeds give bit-identical files.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// Reported and tolerated (e.g. an energy in the almost-every caveat).
    Flagged,
    Fail,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Flagged => "FLAGGED",
            Status::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerdictRow {
    pub check: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Verdicts {
    pub rows: Vec<VerdictRow>,
}

impl Verdicts {
    pub fn push(&mut self, check: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.rows.push(VerdictRow {
            check: check.into(),
            status,
            detail: detail.into(),
        });
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status == Status::Fail).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,status,detail\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.check,
                r.status.as_str(),
                r.detail.replace(',', ";")
            ));
        }
        out
    }

    pub fn print(&self) {
        for r in &self.rows {
            println!("[{}] {}: {}", r.status.as_str(), r.check, r.detail);
        }
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
