//! CSV persistence for every artifact the pipeline produces.
//!
//! Reals are written with 17 significant digits so files round-trip
//! bit-for-bit; absent optional values are empty fields.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::figures::{FigureData, SweepFigureRow};
use crate::num::Real;
use crate::portfolio::ScenarioRecord;
use crate::recovery::{ModelKind, RecoveryModel};
use crate::risk::SweepRow;

pub const SCENARIO_HEADER: [&str; 6] = [
    "scenario_id",
    "x_m",
    "n_defaults",
    "p_d",
    "mean_recovery",
    "mean_loss",
];
pub const MODEL_HEADER: [&str; 3] = ["variant", "param1", "param2"];
pub const CALIBRATION_HEADER: [&str; 8] = [
    "model",
    "window_lower",
    "window_upper",
    "param1",
    "param2",
    "n_records",
    "n_bins",
    "sse",
];
pub const RISK_HEADER: [&str; 8] = [
    "model",
    "lower_threshold",
    "alpha",
    "var",
    "etl",
    "var_ratio",
    "etl_ratio",
    "status",
];
pub const FIG1_HEADER: [&str; 4] = ["kind", "x_m", "b", "count"];
pub const FIG2_HEADER: [&str; 3] = ["p_d", "mean_loss", "structural_fit_loss"];
pub const SWEEP_FIG_HEADER: [&str; 4] = ["lower_threshold", "constant", "probit", "structural"];

/// Formats a real with 17 significant digits.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn fmt_opt<T: Real>(x: Option<T>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn parse_real<T: Real>(field: &str, what: &str, row: usize) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::Data(format!("row {row}: `{what}` is not a number: `{field}`")))
}

fn parse_opt<T: Real>(field: &str, what: &str, row: usize) -> Result<Option<T>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_real(field, what, row).map(Some)
    }
}

fn parse_usize(field: &str, what: &str, row: usize) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("row {row}: `{what}` is not an integer: `{field}`")))
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn reader<R: Read>(r: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Data(format!(
            "unexpected header `{}`, expected `{}`",
            found.iter().collect::<Vec<_>>().join(","),
            header.join(",")
        )));
    }
    Ok(rdr)
}

pub fn write_scenarios<T: Real, W: Write>(w: W, records: &[ScenarioRecord<T>]) -> Result<()> {
    let mut out = writer(w, &SCENARIO_HEADER)?;
    for r in records {
        out.write_record([
            r.scenario_id.to_string(),
            fmt_real(r.x_m),
            r.n_defaults.to_string(),
            fmt_real(r.p_d),
            fmt_opt(r.mean_recovery),
            fmt_real(r.mean_loss),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads scenario records and checks their ids are dense from zero.
pub fn read_scenarios<T: Real, R: Read>(r: R) -> Result<Vec<ScenarioRecord<T>>> {
    let mut rdr = reader(r, &SCENARIO_HEADER)?;
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let record = ScenarioRecord {
            scenario_id: parse_usize(&row[0], "scenario_id", line)? as u64,
            x_m: parse_real(&row[1], "x_m", line)?,
            n_defaults: parse_usize(&row[2], "n_defaults", line)?,
            p_d: parse_real(&row[3], "p_d", line)?,
            mean_recovery: parse_opt(&row[4], "mean_recovery", line)?,
            mean_loss: parse_real(&row[5], "mean_loss", line)?,
        };
        if record.scenario_id != i as u64 {
            return Err(Error::Data(format!(
                "row {line}: scenario ids must be dense from 0"
            )));
        }
        if (record.n_defaults > 0) != record.mean_recovery.is_some() {
            return Err(Error::Data(format!(
                "row {line}: mean_recovery must be present exactly when there are defaults"
            )));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_model<T: Real, W: Write>(w: W, model: &RecoveryModel<T>) -> Result<()> {
    write_models(w, std::slice::from_ref(model))
}

pub fn write_models<T: Real, W: Write>(w: W, models: &[RecoveryModel<T>]) -> Result<()> {
    let mut out = writer(w, &MODEL_HEADER)?;
    for model in models {
        let (p1, p2) = model.params();
        out.write_record([model.kind().as_str().to_string(), fmt_real(p1), fmt_opt(p2)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_models<T: Real, R: Read>(r: R) -> Result<Vec<RecoveryModel<T>>> {
    let mut rdr = reader(r, &MODEL_HEADER)?;
    let mut models = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let kind: ModelKind = row[0].trim().parse()?;
        let p1 = parse_real(&row[1], "param1", line)?;
        let p2 = parse_opt(&row[2], "param2", line)?;
        models.push(RecoveryModel::from_params(kind, p1, p2)?);
    }
    Ok(models)
}

pub fn write_calibrations<T: Real, W: Write>(w: W, rows: &[Calibration<T>]) -> Result<()> {
    let mut out = writer(w, &CALIBRATION_HEADER)?;
    for c in rows {
        let (p1, p2) = c.model.params();
        out.write_record([
            c.model.kind().as_str().to_string(),
            fmt_real(c.window.lower),
            fmt_real(c.window.upper),
            fmt_real(p1),
            fmt_opt(p2),
            c.n_records.to_string(),
            c.n_bins.map(|n| n.to_string()).unwrap_or_default(),
            fmt_real(c.sse),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed `calibration.csv` line.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow<T: Real = f64> {
    pub model: RecoveryModel<T>,
    pub window_lower: T,
    pub window_upper: T,
    pub n_records: usize,
    pub n_bins: Option<usize>,
    pub sse: T,
}

pub fn read_calibrations<T: Real, R: Read>(r: R) -> Result<Vec<CalibrationRow<T>>> {
    let mut rdr = reader(r, &CALIBRATION_HEADER)?;
    let mut rows = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let kind: ModelKind = row[0].trim().parse()?;
        rows.push(CalibrationRow {
            model: RecoveryModel::from_params(
                kind,
                parse_real(&row[3], "param1", line)?,
                parse_opt(&row[4], "param2", line)?,
            )?,
            window_lower: parse_real(&row[1], "window_lower", line)?,
            window_upper: parse_real(&row[2], "window_upper", line)?,
            n_records: parse_usize(&row[5], "n_records", line)?,
            n_bins: if row[6].trim().is_empty() {
                None
            } else {
                Some(parse_usize(&row[6], "n_bins", line)?)
            },
            sse: parse_real(&row[7], "sse", line)?,
        });
    }
    Ok(rows)
}

pub fn write_risk<T: Real, W: Write>(w: W, rows: &[SweepRow<T>]) -> Result<()> {
    let mut out = writer(w, &RISK_HEADER)?;
    for row in rows {
        let model = row.model.map(|m| m.as_str()).unwrap_or("empirical");
        let report = row.report.as_ref();
        out.write_record([
            model.to_string(),
            fmt_opt(row.lower_threshold),
            fmt_real(row.alpha),
            fmt_opt(report.map(|r| r.var)),
            fmt_opt(report.map(|r| r.etl)),
            fmt_opt(report.and_then(|r| r.var_ratio)),
            fmt_opt(report.and_then(|r| r.etl_ratio)),
            row.status.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed `risk.csv` line; `model` is `None` for the empirical baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow<T: Real = f64> {
    pub model: Option<ModelKind>,
    pub lower_threshold: Option<T>,
    pub alpha: T,
    pub var: Option<T>,
    pub etl: Option<T>,
    pub var_ratio: Option<T>,
    pub etl_ratio: Option<T>,
    pub status: String,
}

pub fn read_risk<T: Real, R: Read>(r: R) -> Result<Vec<RiskRow<T>>> {
    let mut rdr = reader(r, &RISK_HEADER)?;
    let mut rows = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let model = match row[0].trim() {
            "empirical" => None,
            other => Some(other.parse()?),
        };
        rows.push(RiskRow {
            model,
            lower_threshold: parse_opt(&row[1], "lower_threshold", line)?,
            alpha: parse_real(&row[2], "alpha", line)?,
            var: parse_opt(&row[3], "var", line)?,
            etl: parse_opt(&row[4], "etl", line)?,
            var_ratio: parse_opt(&row[5], "var_ratio", line)?,
            etl_ratio: parse_opt(&row[6], "etl_ratio", line)?,
            status: row[7].trim().to_string(),
        });
    }
    Ok(rows)
}

fn write_sweep_figure<T: Real, W: Write>(w: W, rows: &[SweepFigureRow<T>]) -> Result<()> {
    let mut out = writer(w, &SWEEP_FIG_HEADER)?;
    for (t, ratios) in rows {
        out.write_record([
            fmt_real(*t),
            fmt_opt(ratios[0]),
            fmt_opt(ratios[1]),
            fmt_opt(ratios[2]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub const FIGURE_FILES: [&str; 4] = [
    "fig1_b_vs_xm.csv",
    "fig2_loss_vs_pd.csv",
    "fig3_var_sweep.csv",
    "fig4_etl_sweep.csv",
];

/// Writes the four figure tables into `dir`.
pub fn write_figures<T: Real>(dir: &Path, data: &FigureData<T>) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut fig1 = writer(File::create(dir.join(FIGURE_FILES[0]))?, &FIG1_HEADER)?;
    for (x, b) in &data.regression.scatter {
        fig1.write_record([
            "scenario".to_string(),
            fmt_real(*x),
            fmt_real(*b),
            "1".to_string(),
        ])?;
    }
    for bin in &data.regression.bins {
        fig1.write_record([
            "bin".to_string(),
            fmt_real(bin.x_center),
            fmt_real(bin.b_value),
            bin.count.to_string(),
        ])?;
    }
    fig1.flush()?;

    let mut fig2 = writer(File::create(dir.join(FIGURE_FILES[1]))?, &FIG2_HEADER)?;
    for (p, l, s) in &data.loss_curve {
        fig2.write_record([fmt_real(*p), fmt_real(*l), fmt_real(*s)])?;
    }
    fig2.flush()?;

    write_sweep_figure(File::create(dir.join(FIGURE_FILES[2]))?, &data.var_sweep)?;
    write_sweep_figure(File::create(dir.join(FIGURE_FILES[3]))?, &data.etl_sweep)?;
    Ok(())
}
