//! LIBSVM sparse text format: `label index:value ...` per line, 1-based
//! strictly ascending indices, missing entries meaning zero.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::RawDataset;
use crate::error::{NrsError, Result};
use crate::tensor::DenseTensor;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> NrsError {
    NrsError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses a LIBSVM file. The feature count is the maximum index seen, or
/// `dim` when given (indices beyond it are an error; use it when a test
/// file's max index is smaller than the training set's).
pub fn parse_libsvm(path: impl AsRef<Path>, dim: Option<usize>) -> Result<RawDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;

    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(parse_err(path, line_no, format!("non-finite label '{label_tok}'")));
        }

        let mut entries = Vec::new();
        let mut prev_index = 0usize;
        for tok in tokens {
            let (idx_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, line_no, format!("malformed token '{tok}'")))?;
            let index: usize = idx_str
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad feature index '{idx_str}'")))?;
            if index == 0 {
                return Err(parse_err(path, line_no, "feature indices are 1-based"));
            }
            if index == prev_index {
                return Err(parse_err(path, line_no, format!("duplicate feature index {index}")));
            }
            if index < prev_index {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("feature indices must ascend: {index} after {prev_index}"),
                ));
            }
            let value: f64 = val_str
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad feature value '{val_str}'")))?;
            if !value.is_finite() {
                return Err(parse_err(path, line_no, format!("non-finite feature value '{val_str}'")));
            }
            if let Some(d) = dim {
                if index > d {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("feature index {index} exceeds the pinned dimension {d}"),
                    ));
                }
            }
            prev_index = index;
            entries.push((index, value));
        }
        max_index = max_index.max(prev_index);
        labels.push(label);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(parse_err(path, 0, "no data lines"));
    }
    let d = dim.unwrap_or(max_index);
    if d == 0 {
        return Err(parse_err(path, 0, "no feature indices seen and no dimension pinned"));
    }

    let mut data = vec![0.0; rows.len() * d];
    for (row_no, entries) in rows.iter().enumerate() {
        for &(index, value) in entries {
            data[row_no * d + (index - 1)] = value;
        }
    }
    Ok(RawDataset {
        features: DenseTensor::from_vec(&[rows.len(), d], data),
        labels,
    })
}

/// Writes a dataset in LIBSVM format, omitting zero entries. `parse` of the
/// written file reproduces the dataset exactly (f64 formatting round-trips).
pub fn write_libsvm(ds: &RawDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path.as_ref())?);
    let d = ds.num_features();
    for (row, &label) in ds.features.data().chunks_exact(d).zip(&ds.labels) {
        write!(out, "{label}")?;
        for (col, &v) in row.iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{}", col + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
