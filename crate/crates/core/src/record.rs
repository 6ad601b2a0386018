//! Persisted run records: one JSON object per run, or a flat CSV with one row
//! per named result.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Version string stamped into every record.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming a directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "LOOPVERTEX_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedResult {
    pub name: String,
    pub value: Complex64,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub spec: Option<ModelSpec>,
    /// Echo of every option that influenced the run.
    pub config: serde_json::Value,
    pub results: Vec<NamedResult>,
    #[serde(default)]
    pub checks: Vec<CheckOutcome>,
    /// Seconds; absent unless timing was requested, so that reruns compare equal.
    pub wall_time: Option<f64>,
    pub seed: Option<u64>,
    pub artifact_version: String,
}

impl RunRecord {
    pub fn new(command: impl Into<String>, spec: Option<ModelSpec>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            spec,
            config,
            results: Vec::new(),
            checks: Vec::new(),
            wall_time: None,
            seed: None,
            artifact_version: ARTIFACT_VERSION.to_string(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Complex64, error: Option<f64>) {
        self.results.push(NamedResult {
            name: name.into(),
            value,
            error,
        });
    }

    pub fn push_real(&mut self, name: impl Into<String>, value: f64) {
        self.push(name, Complex64::new(value, 0.0), None);
    }

    pub fn result(&self, name: &str) -> Option<&NamedResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Contract(format!("json encoding: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Contract(format!("json decoding: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json()? + "\n")
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    /// CSV with header `name,re,im,error`. Floats carry 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Contract(format!("csv encoding: {e}"));
        w.write_record(["name", "re", "im", "error"]).map_err(io)?;
        for r in &self.results {
            let error = r.error.map(format_float).unwrap_or_default();
            w.write_record([
                r.name.as_str(),
                &format_float(r.value.re),
                &format_float(r.value.im),
                &error,
            ])
            .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Contract(format!("csv encoding: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Contract(e.to_string()))
    }

    pub fn results_from_csv(text: &str) -> Result<Vec<NamedResult>> {
        let bad = |e: String| Error::Contract(format!("csv decoding: {e}"));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut out = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| bad(e.to_string()))?;
            if row.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", row.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            out.push(NamedResult {
                name: row[0].to_string(),
                value: Complex64::new(num(&row[1])?, num(&row[2])?),
                error: if row[3].is_empty() { None } else { Some(num(&row[3])?) },
            });
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv()?)
    }

    pub fn load_csv(path: &Path) -> Result<Vec<NamedResult>> {
        Self::results_from_csv(&read_file(path)?)
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Relative paths are placed under `$LOOPVERTEX_OUTPUT_DIR` when it is set.
pub fn resolve_output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: String) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| Error::Contract(format!("creating {}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| Error::Contract(format!("writing {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Contract(format!("reading {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        let spec = ModelSpec::new(3, Complex64::new(0.1, -0.05), 0.1).unwrap();
        let mut rec = RunRecord::new("oracle", Some(spec), serde_json::json!({"tol": 1e-12}));
        rec.push("z_oracle", Complex64::new(0.1 + 0.2, -1.0 / 3.0), Some(1.234e-15));
        rec.push("tiny", Complex64::new(5e-324, -0.0), None);
        rec.push_real("huge", f64::MAX);
        rec.push_real("awkward", 1.010_312_549_999_999_9);
        rec.seed = Some(u64::MAX);
        rec
    }

    #[test]
    fn json_round_trip() {
        let rec = sample();
        let back = RunRecord::from_json(&rec.to_json().unwrap()).unwrap();
        assert_eq!(back, rec);
        for (a, b) in back.results.iter().zip(&rec.results) {
            assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
            assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
        }
    }

    #[test]
    fn csv_round_trip() {
        let rec = sample();
        let back = RunRecord::results_from_csv(&rec.to_csv().unwrap()).unwrap();
        assert_eq!(back, rec.results);
        assert_eq!(back[1].value.im.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(RunRecord::results_from_csv("name,re,im,error\nx,1.0,abc,\n").is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = std::env::temp_dir().join(format!("loopvertex-record-{}", std::process::id()));
        let rec = sample();
        rec.write_json(&dir.join("r.json")).unwrap();
        rec.write_csv(&dir.join("r.csv")).unwrap();
        assert_eq!(RunRecord::load_json(&dir.join("r.json")).unwrap(), rec);
        assert_eq!(RunRecord::load_csv(&dir.join("r.csv")).unwrap(), rec.results);
        fs::remove_dir_all(dir).unwrap();
    }
}
