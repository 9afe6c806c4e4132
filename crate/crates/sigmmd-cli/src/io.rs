//! CSV encoding and decoding of sequence batches.
//!
//! Format: header `sample_id,t,x1,...,xd`, one row per observation, rows
//! sorted by (sample_id, t). Floats carry 17 significant digits so a
//! written value parses back to the identical f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use sigmmd::PathSample;

use crate::error::CliError;

/// Formats with 17 significant digits, enough to reproduce any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a batch in the dataset CSV format.
pub fn write_batch<W: Write>(to: W, paths: &[PathSample]) -> Result<(), CliError> {
    let first = paths
        .first()
        .ok_or_else(|| CliError::Config("refusing to write an empty batch".into()))?;
    let d = first.dim();
    let mut w = csv::Writer::from_writer(to);
    let mut header = vec!["sample_id".to_string(), "t".to_string()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(csv_error)?;
    for (id, path) in paths.iter().enumerate() {
        for i in 0..path.len() {
            let mut row = vec![id.to_string(), fmt_f64(path.times()[i])];
            row.extend(path.point(i).iter().map(|v| fmt_f64(*v)));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| CliError::data("csv writer", e.to_string()))?;
    Ok(())
}

/// Writes a batch to a file, creating or truncating it.
pub fn save_batch(path: &Path, paths: &[PathSample]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_batch(BufWriter::new(file), paths)
}

/// Reads a batch from the dataset CSV format. Sequences are delimited by
/// changes of `sample_id`, which must be non-decreasing; times must be
/// strictly increasing within each sequence.
pub fn read_batch(path: &Path) -> Result<Vec<PathSample>, CliError> {
    let ctx = path.display().to_string();
    let file = File::open(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));

    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() < 3 || &headers[0] != "sample_id" || &headers[1] != "t" {
        return Err(CliError::data(
            ctx,
            "header must be sample_id,t,x1,...,xd",
        ));
    }
    for (k, name) in headers.iter().skip(2).enumerate() {
        let want = format!("x{}", k + 1);
        if name != want {
            return Err(CliError::data(
                ctx,
                format!("coordinate column {} is named '{name}', expected '{want}'", k + 3),
            ));
        }
    }
    let d = headers.len() - 2;

    let mut batch: Vec<PathSample> = Vec::new();
    let mut current: Option<u64> = None;
    let mut times: Vec<f64> = Vec::new();
    let mut points: Vec<f64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = row + 2;
        let field = |i: usize| -> Result<f64, CliError> {
            record[i].trim().parse().map_err(|_| {
                CliError::data(&ctx, format!("line {line}: '{}' is not a number", &record[i]))
            })
        };
        let id: u64 = record[0].trim().parse().map_err(|_| {
            CliError::data(&ctx, format!("line {line}: '{}' is not a sample id", &record[0]))
        })?;
        match current {
            Some(c) if id == c => {}
            Some(c) if id > c => {
                batch.push(PathSample::new(
                    std::mem::take(&mut times),
                    std::mem::take(&mut points),
                    d,
                )?);
                current = Some(id);
            }
            Some(_) => {
                return Err(CliError::data(
                    ctx,
                    format!("line {line}: rows must be sorted by (sample_id, t)"),
                ));
            }
            None => current = Some(id),
        }
        times.push(field(1)?);
        for k in 0..d {
            points.push(field(2 + k)?);
        }
    }
    if times.is_empty() {
        return Err(CliError::data(ctx, "no data rows"));
    }
    batch.push(PathSample::new(times, points, d)?);
    Ok(batch)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::data("csv", e.to_string())
}
