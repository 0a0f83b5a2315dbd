use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::CliError;

pub const VERSION: &str = concat!("rso ", env!("CARGO_PKG_VERSION"));

/// One CSV field. Reals are written with 17 significant digits.
pub enum Cell {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        for (k, c) in cells.into_iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            let _ = match c {
                Cell::Real(x) => write!(self.text, "{x:.16e}"),
                Cell::Int(n) => write!(self.text, "{n}"),
                Cell::Bool(b) => write!(self.text, "{b}"),
                Cell::Text(s) => write!(self.text, "{s}"),
            };
        }
        self.text.push('\n');
    }

    #[cfg(test)]
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// What a command produced before anything is written.
pub struct Report {
    pub results: Vec<serde_json::Value>,
    pub checks: BTreeMap<String, bool>,
    pub files: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report {
            results: Vec::new(),
            checks: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    pub fn result<T: Serialize>(&mut self, v: &T) {
        self.results.push(serde_json::to_value(v).expect("results serialize"));
    }

    pub fn check(&mut self, name: &str, pass: bool) {
        self.checks.insert(name.to_string(), pass);
    }

    pub fn csv(&mut self, name: impl Into<String>, csv: Csv) {
        self.files.push((name.into(), csv.text));
    }

    pub fn file(&mut self, name: impl Into<String>, text: String) {
        self.files.push((name.into(), text));
    }

    pub fn pass(&self) -> bool {
        self.checks.values().all(|&b| b)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: Command,
    pub version: &'static str,
    pub config: RunConfig,
    pub results: Vec<serde_json::Value>,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
    pub files: Vec<String>,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the data files and `<command>.json` under `cfg.out_dir`.
pub fn finish(cfg: &RunConfig, report: Report) -> Result<Summary, CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    for (name, text) in &report.files {
        write(&cfg.out_dir.join(name), text)?;
        files.push(name.clone());
    }
    let json_name = format!("{}.json", cfg.command);
    files.push(json_name.clone());
    let summary = Summary {
        command: cfg.command,
        version: VERSION,
        config: cfg.clone(),
        pass: report.pass(),
        results: report.results,
        checks: report.checks,
        files,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    let path: PathBuf = cfg.out_dir.join(json_name);
    write(&path, &json)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut c = Csv::new(&["a", "b", "c"]);
        c.row(vec![0.1.into(), 3usize.into(), true.into()]);
        assert_eq!(c.as_str(), "a,b,c\n1.0000000000000001e-1,3,true\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }
}
