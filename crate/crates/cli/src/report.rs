//! Run reports and artifact writing. Reports are flat key/value text with a
//! fixed key order; every number a report or CSV carries is reproducible from
//! the config and seed, so identical configs produce byte-identical files.
//! Wall time goes to stdout only. All writes are atomic (temp file in the
//! target directory, then rename).

use std::path::{Path, PathBuf};

use hyperntf_core::factorization::SolveTrace;
use hyperntf_core::tensor::DenseMatrix;

use crate::error::CliError;
use crate::tensor_io::fmt_f64;

/// Ordered key/value report. Keys appear in insertion order; tasks insert
/// them in one documented sequence (config echo first, then results, then
/// artifact names).
#[derive(Debug, Default)]
pub struct RunReport {
    entries: Vec<(String, String)>,
}

impl RunReport {
    pub fn new() -> Self {
        RunReport::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn push_trace_summary(&mut self, trace: &SolveTrace) {
        self.push("iterations", trace.iterations().to_string());
        self.push("termination", trace.termination.as_str());
        if let Some(&obj) = trace.objective.last() {
            self.push_f64("final_objective", obj);
        }
        if let Some(&rse) = trace.rse.last() {
            self.push_f64("final_rse", rse);
        }
        self.push_f64("kkt_residual", trace.kkt_residual);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

/// Write through a temp file in the destination directory and rename over the
/// target, so failures never leave partial output behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = {
        let mut name = path
            .file_name()
            .ok_or_else(|| CliError::Data(format!("{}: not a file path", path.display())))?
            .to_os_string();
        name.push(".tmp");
        match dir {
            Some(d) => d.join(name),
            None => PathBuf::from(name),
        }
    };
    let ctx = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
    std::fs::write(&tmp, bytes).map_err(ctx)?;
    std::fs::rename(&tmp, path).map_err(ctx)?;
    Ok(())
}

pub fn write_report(report: &RunReport, dir: &Path) -> Result<PathBuf, CliError> {
    let path = dir.join("report.txt");
    atomic_write(&path, report.render().as_bytes())?;
    Ok(path)
}

/// Matrix rows as CSV under the given header names.
pub fn write_matrix_csv(
    m: &DenseMatrix,
    header: &[String],
    path: &Path,
) -> Result<(), CliError> {
    atomic_write(path, crate::tensor_io::matrix_csv(m, Some(header)).as_bytes())
}

/// Per-iteration `iter,objective,rse` rows.
pub fn write_trace_csv(trace: &SolveTrace, path: &Path) -> Result<(), CliError> {
    let mut out = String::from("iter,objective,rse\n");
    for (i, (obj, rse)) in trace.objective.iter().zip(&trace.rse).enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, fmt_f64(*obj), fmt_f64(*rse)));
    }
    atomic_write(path, out.as_bytes())
}

/// Embedding or point coordinates with the color tag in the last column.
pub fn write_coords_csv(
    coords: &DenseMatrix,
    color: &[f64],
    names: &[String],
    path: &Path,
) -> Result<(), CliError> {
    let mut header: Vec<String> = names.to_vec();
    header.push("color".to_string());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..coords.rows() {
        for j in 0..coords.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(coords.get(i, j)));
        }
        out.push(',');
        out.push_str(&fmt_f64(color[i]));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}
