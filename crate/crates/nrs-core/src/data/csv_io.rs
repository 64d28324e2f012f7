//! CSV ingestion for purely numeric tables with one label column.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::RawDataset;
use crate::error::{NrsError, Result};
use crate::tensor::DenseTensor;

/// Parses a numeric CSV into features plus the `label_column` (0-based).
/// Ragged rows and non-numeric cells are reported with their row/column.
pub fn parse_csv(
    path: impl AsRef<Path>,
    label_column: usize,
    has_header: bool,
    delimiter: u8,
) -> Result<RawDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| NrsError::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;

    let err_at = |line: usize, msg: String| NrsError::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };

    let mut labels = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            err_at(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() <= label_column {
            return Err(err_at(
                line,
                format!("row has {} columns, label column is {label_column}", record.len()),
            ));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(err_at(
                    line,
                    format!("ragged row: {} columns, expected {w}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                err_at(line, format!("non-numeric cell '{cell}' in column {col}"))
            })?;
            if !value.is_finite() {
                return Err(err_at(line, format!("non-finite cell '{cell}' in column {col}")));
            }
            if col == label_column {
                labels.push(value);
            } else {
                data.push(value);
            }
        }
    }

    if labels.is_empty() {
        return Err(err_at(0, "no data rows".into()));
    }
    let d = width.unwrap() - 1;
    if d == 0 {
        return Err(err_at(0, "no feature columns besides the label".into()));
    }
    Ok(RawDataset {
        features: DenseTensor::from_vec(&[labels.len(), d], data),
        labels,
    })
}

/// Writes `label,features...` rows (label first, no header).
pub fn write_csv(ds: &RawDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path.as_ref())?);
    let d = ds.num_features();
    for (row, &label) in ds.features.data().chunks_exact(d).zip(&ds.labels) {
        write!(out, "{label}")?;
        for &v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
