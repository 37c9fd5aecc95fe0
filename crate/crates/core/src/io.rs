//! Output files: sweep CSV, vector-field dumps and the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces every double bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::observables::field_dump;
use crate::sweep::{RunConfig, SweepOutput, SweepRecord, TransitionReport};

pub const CSV_HEADER: &str = "bz,energy,q,mx,my,mz,solver,near_degenerate,wall_time_s";

pub fn csv_string(records: &[SweepRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.b_z, r.energy, r.q, r.m[0], r.m[1], r.m[2], r.solver, r.near_degenerate, r.wall_time_s
        ));
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected CSV header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let num = |field: &str, line: usize| -> Result<f64> {
        field
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("line {line}: bad number {field:?}")))
    };
    lines
        .enumerate()
        .map(|(k, line)| {
            let ln = k + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::InvalidConfig(format!("line {ln}: expected 9 fields, got {}", f.len())));
            }
            Ok(SweepRecord {
                b_z: num(f[0], ln)?,
                energy: num(f[1], ln)?,
                q: num(f[2], ln)?,
                m: [num(f[3], ln)?, num(f[4], ln)?, num(f[5], ln)?],
                solver: f[6].to_string(),
                near_degenerate: f[7]
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("line {ln}: bad boolean {:?}", f[7])))?,
                wall_time_s: num(f[8], ln)?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    parse_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// File name of the field dump for one field value.
pub fn field_file_name(b_z: f64) -> String {
    format!("field_bz{b_z}.txt")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub config: RunConfig,
    pub csv: String,
    pub field_dumps: Vec<String>,
    pub trace_files: Vec<String>,
    pub transition: Option<TransitionReport>,
    pub points: usize,
    pub failed_points: usize,
}

impl Manifest {
    pub fn new(config: &RunConfig, output: &SweepOutput) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            csv: config.output.csv.clone(),
            field_dumps: output.fields.iter().map(|(b, _)| field_file_name(*b)).collect(),
            trace_files: output
                .traces
                .iter()
                .map(|(b, k, _)| format!("trace_bz{b}_r{k}.txt"))
                .collect(),
            transition: output.transition.clone(),
            points: output.records.len(),
            failed_points: output.records.iter().filter(|r| r.failed()).count(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Writes the CSV, field dumps, traces and manifest under `config.output.dir`.
/// Returns the paths written, manifest last.
pub fn write_outputs(config: &RunConfig, lattice: &Lattice, output: &SweepOutput) -> Result<Vec<PathBuf>> {
    if output.records.is_empty() {
        return Err(Error::InvalidConfig("no records to write".into()));
    }
    let dir = &config.output.dir;
    let manifest = Manifest::new(config, output);
    let mut written = Vec::new();

    let csv = dir.join(&manifest.csv);
    write_file(&csv, &csv_string(&output.records))?;
    written.push(csv);
    for ((_, field), name) in output.fields.iter().zip(&manifest.field_dumps) {
        let p = dir.join(name);
        write_file(&p, &field_dump(lattice, field))?;
        written.push(p);
    }
    for ((_, _, trace), name) in output.traces.iter().zip(&manifest.trace_files) {
        let p = dir.join(name);
        write_file(&p, trace)?;
        written.push(p);
    }
    let p = dir.join(&config.output.manifest);
    write_file(&p, &manifest.to_json()?)?;
    written.push(p);
    Ok(written)
}
