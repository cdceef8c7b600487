//! Batch execution of scenario files: parse, dispatch to a solver, evaluate
//! the regime's invariant checks and emit a JSON report plus CSV series.

pub mod config;
mod regimes;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use config::{Regime, ScenarioConfig};

use crate::error::VarqError;

/// Version tag written into every report.
pub const REPORT_SCHEMA: &str = "varq-report/1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(VarqError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl ScenarioError {
    /// Process exit status for this category.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) | ScenarioError::Io(_) => 2,
            ScenarioError::Numerical(_) => 3,
        }
    }
}

impl From<VarqError> for ScenarioError {
    fn from(e: VarqError) -> Self {
        match e {
            VarqError::InvalidArgument(m) | VarqError::InvalidSpec(m) | VarqError::InvalidState(m) => {
                ScenarioError::Config(m)
            }
            other => ScenarioError::Numerical(other),
        }
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: None, tol_scale: 1.0 }
    }
}

/// One invariant: passes when `value ≤ tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// A column-oriented table written as one CSV file.
#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Series { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Header row then one line per row; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRef {
    pub name: String,
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

/// Deterministic part of a report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBody {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub tol_scale: f64,
    pub scalars: BTreeMap<String, f64>,
    pub series: Vec<SeriesRef>,
    pub checks: Vec<Check>,
    pub waived: bool,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub body: ReportBody,
    pub timing: Timing,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.body.checks.iter().all(|c| c.passed)
    }

    /// 0 when every check passed or failures are waived, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() || self.body.waived {
            0
        } else {
            4
        }
    }
}

/// A finished run: the report and the series it references.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub series: Vec<Series>,
}

/// Collects results while a regime runs.
pub(crate) struct Recorder {
    tol_scale: f64,
    pub(crate) scalars: BTreeMap<String, f64>,
    pub(crate) checks: Vec<Check>,
    pub(crate) series: Vec<Series>,
}

impl Recorder {
    fn new(tol_scale: f64) -> Self {
        Recorder { tol_scale, scalars: BTreeMap::new(), checks: Vec::new(), series: Vec::new() }
    }

    pub(crate) fn scalar(&mut self, name: impl Into<String>, v: f64) {
        self.scalars.insert(name.into(), v);
    }

    /// Record `value ≤ tolerance · tol_scale`.
    pub(crate) fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        let tol = tolerance * self.tol_scale;
        self.checks.push(Check { name: name.into(), value, tolerance: tol, passed: value <= tol });
    }
}

/// Parse and validate without running.
pub fn check_config(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    ScenarioConfig::parse(text)
}

/// Run one scenario from its config text.
pub fn run_scenario(text: &str, opts: &RunOptions) -> Result<RunOutcome, ScenarioError> {
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(ScenarioError::Config(format!("--tol-scale must be positive, got {}", opts.tol_scale)));
    }
    let start = Instant::now();
    let mut cfg = ScenarioConfig::parse(text)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let mut rec = Recorder::new(opts.tol_scale);
    regimes::run(&cfg, &mut rec)?;
    if let Some((k, v)) = rec.scalars.iter().find(|(_, v)| !v.is_finite()) {
        return Err(ScenarioError::Numerical(VarqError::NumericalFailure {
            message: format!("result `{k}` is not finite"),
            diagnostics: vec![(k.clone(), *v)],
        }));
    }
    let passed = rec.checks.iter().all(|c| c.passed);
    let status = if passed { "ok" } else if cfg.waive_invariants { "waived" } else { "invariant-failed" };
    let body = ReportBody {
        seed: cfg.seed,
        waived: cfg.waive_invariants,
        scenario: cfg,
        tol_scale: opts.tol_scale,
        scalars: rec.scalars,
        series: rec
            .series
            .iter()
            .map(|s| SeriesRef { name: s.name.clone(), file: s.file_name(), columns: s.columns.clone(), rows: s.rows.len() })
            .collect(),
        checks: rec.checks,
        status: status.into(),
    };
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        body,
        timing: Timing { wall_time_s: start.elapsed().as_secs_f64() },
    };
    Ok(RunOutcome { report, series: rec.series })
}

/// Write every series of `outcome` into `dir`, one CSV per observable.
pub fn emit_series(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| ScenarioError::Io(format!("{}: {e}", dir.display())))?;
    outcome
        .series
        .iter()
        .map(|s| {
            let path = dir.join(s.file_name());
            fs::write(&path, s.to_csv()).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

/// Write `report.json` and all series into `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<PathBuf, ScenarioError> {
    emit_series(outcome, dir)?;
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&outcome.report).map_err(|e| ScenarioError::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Result of one scenario inside a sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub config: PathBuf,
    pub result: Result<RunReport, ScenarioError>,
}

impl SweepEntry {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(r) => r.exit_code(),
            Err(e) => e.exit_code(),
        }
    }
}

/// Run every `*.toml` in `dir` (sorted by name) on up to `threads` workers,
/// writing each scenario's outputs to `out/<file stem>/`.
pub fn sweep(dir: &Path, out: &Path, opts: &RunOptions, threads: Option<usize>) -> Result<Vec<SweepEntry>, ScenarioError> {
    let mut configs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| ScenarioError::Io(e.to_string()))?;
    let entries = pool.install(|| {
        configs
            .par_iter()
            .map(|path| {
                let result = fs::read_to_string(path)
                    .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))
                    .and_then(|text| run_scenario(&text, opts))
                    .and_then(|outcome| {
                        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        write_outputs(&outcome, &out.join(stem))?;
                        Ok(outcome.report)
                    });
                SweepEntry { config: path.clone(), result }
            })
            .collect()
    });
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_header_only() {
        let s = Series::new("empty", &["t", "x"]);
        assert_eq!(s.to_csv(), "t,x\n");
    }

    #[test]
    fn csv_round_trips_floats() {
        let mut s = Series::new("s", &["a", "b"]);
        s.push(vec![0.1 + 0.2, 1e-300]);
        let text = s.to_csv();
        let line = text.lines().nth(1).unwrap();
        let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals, vec![0.1 + 0.2, 1e-300]);
    }

    #[test]
    fn error_categories() {
        assert_eq!(ScenarioError::from(VarqError::InvalidSpec("x".into())).exit_code(), 2);
        assert_eq!(ScenarioError::from(VarqError::DomainEscape("x".into())).exit_code(), 3);
        assert_eq!(ScenarioError::from(VarqError::MaxIterations { iterations: 3, residual: 1.0 }).exit_code(), 3);
    }
}
