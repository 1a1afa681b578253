//! File formats.
//!
//! - Series CSV: header `t,<label_1>,…,<label_P>`, one row per instant,
//!   `t` counting from 0.
//! - Coefficients JSON: `{"P","L","T","segment_starts","coeffs"}` with
//!   0-based segment starts and `coeffs[segment][lag][i][j]`. Floats are
//!   written with 17 significant digits so that load → save is byte-exact.
//! - Breakpoints CSV: `t,i,j`, all 1-based.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dynnet::analysis::NormRow;
use dynnet::selection::{GridPoint, GridSpec, ScoreRow};
use dynnet::simulator::RescaleEvent;
use dynnet::{BreakpointSet, MultivariateSeries, TvarCoefficients};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> CliError {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        kind => CliError::Parse { path: path.into(), line, column: 0, message: format!("{kind:?}") },
    }
}

fn parse_field<T: std::str::FromStr>(path: &Path, record: &csv::StringRecord, column: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(column).unwrap_or("");
    raw.parse().map_err(|e: T::Err| CliError::Parse {
        path: path.into(),
        line,
        column: column + 1,
        message: format!("cannot parse {raw:?}: {e}"),
    })
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_series(path: &Path) -> Result<MultivariateSeries> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.get(0) != Some("t") || headers.len() < 2 {
        return Err(CliError::Parse {
            path: path.into(),
            line: 1,
            column: 1,
            message: "header must be t,<label_1>,…,<label_P>".into(),
        });
    }
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let p = labels.len();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let t: usize = parse_field(path, &record, 0)?;
        if t != row {
            return Err(CliError::Parse {
                path: path.into(),
                line: record.position().map_or(0, |p| p.line()),
                column: 1,
                message: format!("expected t = {row}, found {t}"),
            });
        }
        for col in 1..=p {
            values.push(parse_field::<f64>(path, &record, col)?);
        }
    }
    let t_len = values.len() / p;
    let matrix = DMatrix::from_column_slice(p, t_len, &values);
    Ok(MultivariateSeries::new(matrix, labels)?)
}

pub fn write_series(path: &Path, series: &MultivariateSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| csv_error(path, e);
    let mut header = vec!["t".to_string()];
    header.extend(series.labels().iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (t, col) in series.values().column_iter().enumerate() {
        let mut row = vec![t.to_string()];
        // Display for f64 is the shortest string that parses back exactly
        row.extend(col.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientsFile {
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "T")]
    t: usize,
    segment_starts: Vec<usize>,
    coeffs: Vec<Vec<Vec<Vec<f64>>>>,
}

/// Writes every float as `d.dddddddddddddddde±x`.
struct FixedPrecision;

impl serde_json::ser::Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn coefficients_to_string(coeffs: &TvarCoefficients) -> Result<String> {
    if coeffs.segments().iter().flatten().any(|a| a.iter().any(|v| !v.is_finite())) {
        return Err(CliError::Invalid("coefficients contain non-finite values".into()));
    }
    let p = coeffs.num_nodes();
    let file = CoefficientsFile {
        p,
        l: coeffs.order(),
        t: coeffs.num_samples(),
        segment_starts: coeffs.segment_starts().iter().map(|s| s - 1).collect(),
        coeffs: coeffs
            .segments()
            .iter()
            .map(|lags| {
                lags.iter()
                    .map(|a| (0..p).map(|i| a.row(i).iter().copied().collect()).collect())
                    .collect()
            })
            .collect(),
    };
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPrecision);
    file.serialize(&mut ser).map_err(|e| CliError::Invalid(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
}

pub fn write_coefficients(path: &Path, coeffs: &TvarCoefficients) -> Result<()> {
    let text = coefficients_to_string(coeffs)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_coefficients(path: &Path) -> Result<TvarCoefficients> {
    let file: CoefficientsFile = read_json(path)?;
    let bad = |msg: String| CliError::Invalid(format!("{}: {msg}", path.display()));
    if file.coeffs.len() != file.segment_starts.len() {
        return Err(bad(format!("{} segments but {} segment starts", file.coeffs.len(), file.segment_starts.len())));
    }
    let mut segments = Vec::with_capacity(file.coeffs.len());
    for (s, lags) in file.coeffs.iter().enumerate() {
        if lags.len() != file.l {
            return Err(bad(format!("segment {s} has {} lags, expected L = {}", lags.len(), file.l)));
        }
        let mut mats = Vec::with_capacity(file.l);
        for (lag, rows) in lags.iter().enumerate() {
            if rows.len() != file.p || rows.iter().any(|r| r.len() != file.p) {
                return Err(bad(format!("segment {s}, lag {} is not {p}×{p}", lag + 1, p = file.p)));
            }
            mats.push(DMatrix::from_fn(file.p, file.p, |i, j| rows[i][j]));
        }
        segments.push(mats);
    }
    let starts = file.segment_starts.iter().map(|s| s + 1).collect();
    Ok(TvarCoefficients::new(file.l, file.t, starts, segments)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_breakpoints(path: &Path, bps: &BreakpointSet) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "t,i,j").map_err(io)?;
    for b in bps.iter() {
        writeln!(w, "{},{},{}", b.t, b.i, b.j).map_err(io)?;
    }
    finish(path, w)
}

pub fn write_rescales(path: &Path, events: &[RescaleEvent]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "t,scope,factor").map_err(io)?;
    for r in events {
        let scope = match r.scope {
            dynnet::simulator::RescaleScope::Filter => "filter",
            dynnet::simulator::RescaleScope::System => "system",
        };
        writeln!(w, "{},{scope},{}", r.t, r.factor).map_err(io)?;
    }
    finish(path, w)
}

/// Grid file: header `lambda[,gamma]`, one candidate per row.
pub fn read_grid(path: &Path) -> Result<GridSpec> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let lambda_col = headers.iter().position(|h| h == "lambda");
    let gamma_col = headers.iter().position(|h| h == "gamma");
    let Some(lambda_col) = lambda_col else {
        return Err(CliError::Parse { path: path.into(), line: 1, column: 1, message: "missing lambda column".into() });
    };
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let lambda = parse_field(path, &record, lambda_col)?;
        let gamma = match gamma_col {
            Some(c) => parse_field(path, &record, c)?,
            None => 0.0,
        };
        points.push(GridPoint { lambda, gamma });
    }
    Ok(GridSpec::from_points(points)?)
}

pub fn write_score_table(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    let folds = rows.first().map_or(0, |r| r.fold_scores.len());
    let mut header = String::from("lambda,gamma,score");
    for m in 0..folds {
        header.push_str(&format!(",fold_{m}"));
    }
    writeln!(w, "{header}").map_err(io)?;
    for r in rows {
        let mut line = format!("{},{},{}", r.lambda, r.gamma, r.score);
        for s in &r.fold_scores {
            line.push_str(&format!(",{s}"));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    finish(path, w)
}

/// `i,j,window_start,window_end,norm,tap_1..tap_L`; window bounds use the
/// series file's 0-based time axis.
pub fn write_norm_report(path: &Path, order: usize, rows: &[NormRow]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    let mut header = String::from("i,j,window_start,window_end,norm");
    for k in 1..=order {
        header.push_str(&format!(",tap_{k}"));
    }
    writeln!(w, "{header}").map_err(io)?;
    for r in rows {
        let mut line = format!("{},{},{},{},{}", r.i, r.j, r.start - 1, r.end - 1, r.norm);
        for v in &r.taps {
            line.push_str(&format!(",{v}"));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        let c = TvarCoefficients::time_invariant(3, vec![DMatrix::from_element(1, 1, 0.1)]).unwrap();
        let text = coefficients_to_string(&c).unwrap();
        assert_eq!(text, "{\"P\":1,\"L\":1,\"T\":3,\"segment_starts\":[1],\"coeffs\":[[[[1.0000000000000001e-1]]]]}\n");
    }

    #[test]
    fn non_finite_coefficients_are_rejected() {
        let c = TvarCoefficients::time_invariant(3, vec![DMatrix::from_element(1, 1, f64::NAN)]);
        if let Ok(c) = c {
            assert!(coefficients_to_string(&c).is_err());
        }
    }
}
