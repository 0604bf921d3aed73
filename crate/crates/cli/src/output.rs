//! Artifact writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use condensate_core::functionals::DiagnosticsRecord;
use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA: &str = include_str!("schema.md");

pub const DIAGNOSTICS_HEADER: [&str; 14] = [
    "t",
    "mass_beta",
    "grad_energy",
    "diss1",
    "diss2",
    "diss3",
    "diss4",
    "diss5",
    "sup_u",
    "sup_bound",
    "holder_C",
    "deadcore",
    "energy",
    "entropy",
];

/// 17 significant digits, so values round-trip exactly.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let out = OutDir {
            root: root.to_path_buf(),
        };
        out.write_text("schema.md", SCHEMA)?;
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn subdir(&self, name: &str) -> Result<OutDir, CliError> {
        OutDir::create(&self.root.join(name))
    }

    pub fn write_text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| CliError::Experiment(e.to_string()))?;
        body.push('\n');
        self.write_text(name, &body)
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for row in rows {
            serde_json::to_writer(&mut w, row).map_err(|e| CliError::Experiment(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn csv(&self, name: &str) -> Result<CsvOut, CliError> {
        let path = self.root.join(name);
        let writer = csv::Writer::from_path(&path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e.into(),
        })?;
        Ok(CsvOut { path, writer })
    }
}

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::Io {
            path: self.path.clone(),
            source: e.into(),
        })
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// `snapshots.csv`: every `stride`-th snapshot and the last.
pub fn write_snapshots(
    out: &OutDir,
    x: &[f64],
    times: &[f64],
    states: &[Vec<f64>],
    stride: usize,
) -> Result<(), CliError> {
    let mut w = out.csv("snapshots.csv")?;
    w.row(["t", "x", "u"])?;
    let last = times.len().saturating_sub(1);
    for (s, (t, u)) in times.iter().zip(states).enumerate() {
        if s % stride != 0 && s != last {
            continue;
        }
        let t = float(*t);
        for (xi, ui) in x.iter().zip(u) {
            w.row([t.as_str(), &float(*xi), &float(*ui)])?;
        }
    }
    w.finish()
}

pub fn write_diagnostics(out: &OutDir, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let mut w = out.csv("diagnostics.csv")?;
    w.row(DIAGNOSTICS_HEADER)?;
    for d in records {
        let mut row = vec![float(d.t), float(d.mass_beta), float(d.grad_energy)];
        row.extend(d.dissipation.iter().map(|v| float(*v)));
        row.extend([d.sup_u, d.sup_bound, d.holder_c, d.deadcore, d.energy, d.entropy].map(float));
        w.row(&row)?;
    }
    w.finish()
}

/// Appends human-readable lines to `run.log`; the only artifact allowed to vary between reruns.
pub struct RunLog {
    path: PathBuf,
    lines: Vec<String>,
}

impl RunLog {
    pub fn new(out: &OutDir) -> RunLog {
        RunLog {
            path: out.path().join("run.log"),
            lines: Vec::new(),
        }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn save(&self) -> Result<(), CliError> {
        let mut body = self.lines.join("\n");
        body.push('\n');
        fs::write(&self.path, body).map_err(|e| CliError::io(&self.path, e))
    }
}
