//! Feature tables in CSV: a mandatory header row, numeric feature columns and an
//! optional integer label column.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pppl_core::Matrix;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub labels: Option<Vec<usize>>,
}

pub fn read_csv(path: &Path, label_column: Option<&str>) -> Result<CsvTable> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv_from(file, path, label_column)
}

/// Parses CSV from any reader; `origin` is only used in error messages.
///
/// A named label column that is absent from the header is an error.
pub fn read_csv_from<R: Read>(reader: R, origin: &Path, label_column: Option<&str>) -> Result<CsvTable> {
    let at = |line: u64, message: String| CliError::DataAt {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| at(1, e.to_string()))?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(at(1, "missing header row".into()));
    }
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| at(1, format!("label column `{name}` not in header")))?,
        ),
        None => None,
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(at(1, "no feature columns".into()));
    }

    let mut data = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            at(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (i, field) in record.iter().enumerate() {
            let column = &header[i];
            if Some(i) == label_idx {
                let label: usize = field
                    .parse()
                    .map_err(|_| at(line, format!("label `{field}` in column `{column}` is not a nonnegative integer")))?;
                labels.as_mut().expect("label column present").push(label);
            } else {
                let v: f32 = field
                    .parse()
                    .map_err(|_| at(line, format!("value `{field}` in column `{column}` is not a number")))?;
                if !v.is_finite() {
                    return Err(at(line, format!("value `{field}` in column `{column}` is not finite")));
                }
                data.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(at(1, "no data rows".into()));
    }
    let features = Matrix::from_vec(rows, feature_names.len(), data)?;
    Ok(CsvTable {
        feature_names,
        features,
        labels,
    })
}

/// Writes features as `x0..x{d-1}`, followed by a `label` column when labels are given.
pub fn write_csv(path: &Path, features: &Matrix, labels: Option<&[usize]>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv_to(file, features, labels).map_err(|e| CliError::io(path, e))
}

pub fn write_csv_to<W: Write>(writer: W, features: &Matrix, labels: Option<&[usize]>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..features.cols()).map(|i| format!("x{i}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (r, row) in features.iter_rows().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = labels {
            fields.push(l[r].to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush()
}
