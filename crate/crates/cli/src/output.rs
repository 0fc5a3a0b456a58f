//! Artifact writers. Floats use shortest round-trip formatting.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use annmoc::IterationRecord;

use crate::CliError;

pub const FLUX_FILE: &str = "flux.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CHECKPOINT_FILE: &str = "surrogate.txt";
pub const COMPARE_FILE: &str = "compare.csv";

/// Formats `v` so that parsing the text gives back the same bits.
pub fn float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Flux on the evaluation grid. Reference columns appear only when a
/// reference is given.
pub fn write_flux(
    path: &Path,
    xs: &[f64],
    estimate: &[f64],
    reference: Option<&[f64]>,
) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = match reference {
        Some(r) => xs
            .iter()
            .zip(estimate)
            .zip(r)
            .map(|((x, e), r)| vec![float(*x), float(*e), float(*r), float((e - r).abs())])
            .collect(),
        None => xs
            .iter()
            .zip(estimate)
            .map(|(x, e)| vec![float(*x), float(*e)])
            .collect(),
    };
    let header: &[&str] = if reference.is_some() {
        &["x", "psi_estimate", "psi_reference", "abs_error"]
    } else {
        &["x", "psi_estimate"]
    };
    write_rows(path, header, &rows)
}

/// Iteration log without wall-clock time, so equal seeds give equal bytes.
pub fn write_history(path: &Path, history: &[IterationRecord]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                float(r.metric),
                float(r.threshold),
                float(r.train_loss),
                r.epochs.to_string(),
            ]
        })
        .collect();
    write_rows(
        path,
        &["iter", "metric", "threshold", "train_loss", "epochs"],
        &rows,
    )
}

pub fn write_timing(path: &Path, history: &[IterationRecord]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| vec![r.iteration.to_string(), float(r.seconds)])
        .collect();
    write_rows(path, &["iter", "seconds"], &rows)
}

/// `key=value` lines in the given order.
pub fn write_summary(path: &Path, entries: &[(String, String)]) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(io_err(path))?;
    for (k, v) in entries {
        writeln!(file, "{k}={v}").map_err(io_err(path))?;
    }
    file.flush().map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub kind: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_metric: f64,
    pub l2_error: f64,
    pub seconds: f64,
}

pub fn write_compare(path: &Path, rows: &[CompareRow]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.clone(),
                r.converged.to_string(),
                r.iterations.to_string(),
                float(r.final_metric),
                float(r.l2_error),
                float(r.seconds),
            ]
        })
        .collect();
    write_rows(
        path,
        &[
            "kind",
            "converged",
            "iterations",
            "final_metric",
            "l2_error",
            "seconds",
        ],
        &rows,
    )
}

/// Reads a CSV file back as a header and string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(
            rec.map_err(csv_err(path))?
                .iter()
                .map(String::from)
                .collect(),
        );
    }
    Ok((header, rows))
}

/// Reads a `key=value` file.
pub fn read_summary(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trips() {
        for v in [
            0.0,
            1.0,
            -0.1,
            1e-300,
            0.1 + 0.2,
            123456.789,
            5e-5,
            1e20,
            f64::MIN_POSITIVE,
        ] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(float(0.5), "0.5");
        assert_eq!(float(1e-5), "1e-5");
    }
}
