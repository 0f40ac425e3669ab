use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::IoError;
use crate::calibration::{CostEntry, ExperimentTrace};
use crate::thermal::ProbeSeries;

fn csv_error(e: csv::Error) -> IoError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::Format(io.to_string()),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => IoError::Row {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => IoError::Row {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn number(field: &str, line: u64, column: &str) -> Result<f64, IoError> {
    let v: f64 = field.trim().parse().map_err(|_| IoError::Row {
        line,
        message: format!("column '{column}': '{field}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(IoError::Row {
            line,
            message: format!("column '{column}': non-finite value"),
        });
    }
    Ok(v)
}

/// Parse an experiment CSV: `time_s` first, then probe columns and/or `mean_C`.
/// Without `mean_C` the mean is the row average of the probe columns.
pub fn read_experiment(reader: impl Read, id: &str) -> Result<ExperimentTrace, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0) != Some("time_s") {
        return Err(IoError::Row {
            line: 1,
            message: format!("first column must be 'time_s', found '{}'", headers.get(0).unwrap_or("")),
        });
    }
    let mean_col = headers.iter().position(|h| h == "mean_C");
    let probe_cols: Vec<usize> = (1..headers.len()).filter(|&c| Some(c) != mean_col).collect();
    if mean_col.is_none() && probe_cols.is_empty() {
        return Err(IoError::Row {
            line: 1,
            message: "need probe columns or 'mean_C'".into(),
        });
    }

    let mut times = Vec::new();
    let mut mean = Vec::new();
    let mut probes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let t = number(&record[0], line, "time_s")?;
        if times.last().is_some_and(|&prev| t < prev) {
            return Err(IoError::Row {
                line,
                message: format!("time {t} is earlier than the previous row"),
            });
        }
        let row = probe_cols
            .iter()
            .map(|&c| number(&record[c], line, &headers[c]))
            .collect::<Result<Vec<_>, _>>()?;
        let m = match mean_col {
            Some(c) => number(&record[c], line, "mean_C")?,
            None => row.iter().sum::<f64>() / row.len() as f64,
        };
        times.push(t);
        mean.push(m);
        if !row.is_empty() {
            probes.push(row);
        }
    }
    let mut trace = ExperimentTrace::new(id, times, mean).map_err(|e| IoError::Format(e.to_string()))?;
    trace.probes = probes;
    Ok(trace)
}

/// Read an experiment file; the trace id is the file stem.
pub fn ingest_experiment(path: &Path) -> Result<ExperimentTrace, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_experiment(file, &id).map_err(|e| e.in_file(path))
}

/// `time_s,probe1_C,...,probeN_C,mean_C`. Values use the shortest
/// representation that parses back to the same float.
pub fn write_probe_series(out: impl Write, series: &ProbeSeries) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time_s".to_string()];
    header.extend((1..=series.positions.len()).map(|p| format!("probe{p}_C")));
    header.push("mean_C".into());
    w.write_record(&header).map_err(csv_error)?;
    for ((t, row), m) in series.times.iter().zip(&series.temperatures).zip(&series.mean) {
        let mut rec = Vec::with_capacity(row.len() + 2);
        rec.push(t.to_string());
        rec.extend(row.iter().map(f64::to_string));
        rec.push(m.to_string());
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(|e| IoError::Format(e.to_string()))
}

pub fn write_probe_csv(path: &Path, series: &ProbeSeries) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::file(path, e))?;
    write_probe_series(file, series).map_err(|e| e.in_file(path))
}

const COST_HEADER: [&str; 4] = ["h", "T_c_side", "T_c_top", "rmse_C"];

pub fn write_cost_table(path: &Path, table: &[CostEntry]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let run = |w: &mut csv::Writer<File>| -> Result<(), csv::Error> {
        w.write_record(COST_HEADER)?;
        for e in table {
            w.write_record([e.h, e.side_ambient, e.top_ambient, e.rmse].map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    };
    run(&mut w).map_err(|e| csv_error(e).in_file(path))
}

pub fn read_cost_table(path: &Path) -> Result<Vec<CostEntry>, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    let read = || -> Result<Vec<CostEntry>, IoError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.iter().ne(COST_HEADER) {
            return Err(IoError::Row {
                line: 1,
                message: format!("expected header {}", COST_HEADER.join(",")),
            });
        }
        let mut out = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let v = |c: usize| number(&record[c], line, COST_HEADER[c]);
            out.push(CostEntry {
                h: v(0)?,
                side_ambient: v(1)?,
                top_ambient: v(2)?,
                rmse: v(3)?,
            });
        }
        Ok(out)
    };
    read().map_err(|e| e.in_file(path))
}
