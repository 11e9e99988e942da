//! Runs every config in a directory and writes a CSV summary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Experiment;
use crate::report::{exit, Outcome, RunReport, RunStatus, REPORT_SCHEMA_VERSION};
use crate::run::{run_experiment, RunOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteEntry {
    Run(Box<RunReport>),
    ConfigError { file: String, error: String },
}

impl SuiteEntry {
    pub fn exit_code(&self) -> i32 {
        match self {
            SuiteEntry::Run(r) => r.exit_code(),
            SuiteEntry::ConfigError { .. } => exit::CONFIG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub files: Vec<String>,
    pub runs: Vec<SuiteEntry>,
    pub exit_code: i32,
    pub wall_clock_seconds: f64,
}

/// One CSV row per config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub file: String,
    pub name: String,
    pub map: String,
    pub norm: String,
    pub n: Option<usize>,
    pub certificate: String,
    pub q: Option<u64>,
    pub permutation_order_form: Option<bool>,
    pub below_2n: Option<bool>,
    pub v_dim: Option<usize>,
    pub w_dim: Option<usize>,
    pub a2_defect: Option<f64>,
    pub isometry_defect: Option<f64>,
    pub value_defect: Option<f64>,
    pub oracle_agrees: Option<bool>,
    pub status: String,
    pub exit_code: i32,
}

fn status_name(s: RunStatus) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl SummaryRow {
    pub fn new(file: &str, entry: &SuiteEntry) -> Self {
        let mut row = SummaryRow {
            file: file.to_string(),
            name: String::new(),
            map: String::new(),
            norm: String::new(),
            n: None,
            certificate: String::new(),
            q: None,
            permutation_order_form: None,
            below_2n: None,
            v_dim: None,
            w_dim: None,
            a2_defect: None,
            isometry_defect: None,
            value_defect: None,
            oracle_agrees: None,
            status: status_name(RunStatus::ConfigError),
            exit_code: entry.exit_code(),
        };
        let SuiteEntry::Run(r) = entry else {
            return row;
        };
        row.name = r.config.name.clone();
        row.map = r.map.to_string();
        row.norm = r.config.norm.kind.to_string();
        row.status = status_name(r.verdict.status);
        if let Some(c) = &r.certificate {
            row.certificate = format!("{:?}", c.verdict).to_uppercase();
        }
        if let Some(o) = &r.orbits {
            row.q = o.q;
            if let Some(a) = &o.audit {
                row.n = Some(a.n);
                row.permutation_order_form = Some(a.verdicts.permutation_order_form);
                row.below_2n = Some(a.verdicts.below_2n);
            }
        }
        if let Some(s) = &r.structure {
            row.n = Some(s.basepoint.len());
            row.v_dim = Some(s.v.dim);
            row.w_dim = Some(s.w.dim);
            row.a2_defect = Some(s.projection_check.a2_defect);
            row.isometry_defect = Some(s.isometry_check.max_defect);
            row.value_defect = Some(s.value_defect);
            if let Some(Outcome::Ok(o)) = &s.oracle {
                row.oracle_agrees = Some(o.agrees);
            }
        }
        row
    }
}

pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs each config's own command list. Configs run in parallel; results
/// keep the sorted file order.
pub fn run_suite(dir: &Path, seed: Option<u64>, run: RunOptions) -> Result<SuiteReport> {
    let started = Instant::now();
    let files = config_files(dir)?;
    if files.is_empty() {
        bail!("no *.json configs in {}", dir.display());
    }
    let runs: Vec<SuiteEntry> = files
        .par_iter()
        .map(
            |path| match Experiment::load(path).and_then(|e| e.with_overrides(seed, None)) {
                Ok(exp) => {
                    let commands = exp.config.commands.clone();
                    SuiteEntry::Run(Box::new(run_experiment(&exp, &commands, run)))
                }
                Err(e) => SuiteEntry::ConfigError {
                    file: file_name(path),
                    error: format!("{e:#}"),
                },
            },
        )
        .collect();
    let exit_code = runs
        .iter()
        .map(SuiteEntry::exit_code)
        .fold(exit::OK, exit::worst);
    Ok(SuiteReport {
        schema_version: REPORT_SCHEMA_VERSION,
        files: files.iter().map(|p| file_name(p)).collect(),
        runs,
        exit_code,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

impl SuiteReport {
    pub fn rows(&self) -> Vec<SummaryRow> {
        self.files
            .iter()
            .zip(&self.runs)
            .map(|(f, r)| SummaryRow::new(f, r))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
