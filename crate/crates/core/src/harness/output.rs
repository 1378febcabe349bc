//! CSV tables with a `key = value` metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Plot-ready table; every cell is already formatted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    /// Numeric column; unparsable cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .map(|c| c.parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Formats a float with the shortest round-trip representation.
pub fn f(x: f64) -> String {
    format!("{x}")
}

/// Resolved configuration, minus the worker count, which never changes
/// results.
pub fn metadata(cfg: &ExperimentConfig) -> String {
    let mut s = format!("experiment = {}\nseed = {}\n", cfg.experiment, cfg.seed);
    for (k, v) in cfg.resolved.iter().filter(|(k, _)| k != "run.workers") {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `<dir>/<experiment>.csv` and `<dir>/<experiment>.meta`. Returns the
/// CSV path.
pub fn write_outputs(cfg: &ExperimentConfig, table: &Table) -> Result<PathBuf> {
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let csv = dir.join(format!("{}.csv", cfg.experiment));
    let meta = dir.join(format!("{}.meta", cfg.experiment));
    fs::write(&csv, table.to_csv()).map_err(|e| io(&csv, e))?;
    fs::write(&meta, metadata(cfg)).map_err(|e| io(&meta, e))?;
    Ok(csv)
}
