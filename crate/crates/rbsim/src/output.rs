//! Artifact writers and readers: dataset CSVs with stable documented
//! headers, fit-report JSONs, and replayable metadata sidecars.
//!
//! All CSVs are UTF-8 with a header row, comma separators, and `.` decimal
//! points. Floats are printed in shortest round-trip form, so identical
//! datasets always serialize to identical bytes. Detunings are written in
//! Hz (file units), times in seconds.

use crate::config::RunConfig;
use crate::experiments::{EchoDataset, HoldTimeDataset, RbDataset, ScanDataset};
use crate::fit::DecayFit;
use crate::{Error, Result};
use std::path::Path;

/// Columns extracted from a user CSV: first column is x, second y, and an
/// optional third is the standard error of y.
#[derive(Debug, Clone)]
pub struct XyData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yerr: Option<Vec<f64>>,
    pub x_name: String,
    pub y_name: String,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::CsvFormat(format!("{other:?}")),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// One row per job: `cg_id,pr_id,truncation,fidelity,fidelity_sem`.
pub fn write_rb_results(path: &Path, data: &RbDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["cg_id", "pr_id", "truncation", "fidelity", "fidelity_sem"])
        .map_err(csv_error)?;
    for row in &data.rows {
        w.write_record([
            row.cg_id.to_string(),
            row.pr_id.to_string(),
            row.truncation.to_string(),
            num(row.fidelity),
            num(row.fidelity_sem),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot-ready aggregate: `truncation,mean_fidelity,fidelity_sem`, one row
/// per truncation.
pub fn write_rb_plot(path: &Path, data: &RbDataset) -> Result<()> {
    let (lengths, means, sems) = data.aggregate();
    let mut w = csv_writer(path)?;
    w.write_record(["truncation", "mean_fidelity", "fidelity_sem"])
        .map_err(csv_error)?;
    for i in 0..lengths.len() {
        w.write_record([num(lengths[i]), num(means[i]), num(sems[i])])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Generic scan: three columns named by `headers`, x written as
/// `scan_value * x_scale` (e.g. `1 / TAU` to emit rad/s detunings in Hz).
pub fn write_scan(
    path: &Path,
    data: &ScanDataset,
    headers: [&str; 3],
    x_scale: f64,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(headers).map_err(csv_error)?;
    for row in &data.rows {
        w.write_record([num(row.scan_value * x_scale), num(row.mean), num(row.sem)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `total_delay_s,amplitude,amplitude_err,fit_failed` — one row per total
/// echo delay.
pub fn write_echo_amplitudes(path: &Path, data: &EchoDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["total_delay_s", "amplitude", "amplitude_err", "fit_failed"])
        .map_err(csv_error)?;
    for a in &data.amplitudes {
        w.write_record([
            num(a.total_time),
            num(a.amplitude),
            num(a.amplitude_err),
            a.fit_failed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw fringes behind the amplitudes:
/// `total_delay_s,dt_s,p0,p0_sem`.
pub fn write_echo_fringes(path: &Path, data: &EchoDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["total_delay_s", "dt_s", "p0", "p0_sem"])
        .map_err(csv_error)?;
    for (t, scan) in &data.fringes {
        for row in &scan.rows {
            w.write_record([num(*t), num(row.scan_value), num(row.mean), num(row.sem)])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t_hold_s,total_time_s,fidelity,fidelity_sem`.
pub fn write_hold_time(path: &Path, data: &HoldTimeDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t_hold_s", "total_time_s", "fidelity", "fidelity_sem"])
        .map_err(csv_error)?;
    for row in &data.rows {
        w.write_record([num(row.t_hold), num(row.total_time), num(row.mean), num(row.sem)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Decay-fit JSON with the headline quantities at the top level alongside
/// the full report.
pub fn decay_fit_json(fit: &DecayFit) -> serde_json::Value {
    serde_json::json!({
        "model": "rb",
        "d_if": fit.d_if(),
        "d_if_err": fit.d_if_err(),
        "d": fit.d(),
        "d_err": fit.d_err(),
        "e_g": fit.e_g(),
        "e_g_err": fit.e_g_err(),
        "report": fit.report,
    })
}

/// Pretty JSON plus trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid_input(format!("json serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Metadata sidecar: the command, the code version, and the full effective
/// configuration. [`RunConfig::load`] accepts the written file directly, so
/// a run can be replayed from its sidecar alone.
pub fn sidecar(command: &str, config: &RunConfig, code_version: &str) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "command": command,
        "code_version": code_version,
        "config": config.to_json_value()?,
    }))
}

/// Reads `x,y[,yerr]` columns (by position) from a headered CSV, with
/// row/column diagnostics on malformed input. Rows are numbered from 1
/// including the header.
pub fn read_xy_csv(path: &Path) -> Result<XyData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() < 2 {
        return Err(Error::CsvFormat(format!(
            "{}: expected at least two columns (x, y), found {}",
            path.display(),
            headers.len()
        )));
    }
    let has_err = headers.len() >= 3;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut yerr = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| {
            Error::CsvFormat(format!("{}: row {row}: {e}", path.display()))
        })?;
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| {
                Error::CsvFormat(format!(
                    "{}: row {row}, column {} ({}): not a number: {raw:?}",
                    path.display(),
                    col + 1,
                    headers.get(col).unwrap_or("?"),
                ))
            })
        };
        x.push(field(0)?);
        y.push(field(1)?);
        if has_err {
            yerr.push(field(2)?);
        }
    }
    if x.is_empty() {
        return Err(Error::CsvFormat(format!(
            "{}: no data rows after the header",
            path.display()
        )));
    }
    Ok(XyData {
        x,
        y,
        yerr: if has_err { Some(yerr) } else { None },
        x_name: headers.get(0).unwrap_or("x").to_string(),
        y_name: headers.get(1).unwrap_or("y").to_string(),
    })
}
