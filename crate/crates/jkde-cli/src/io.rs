//! Dataset and model file handling.

use std::fs;
use std::path::Path;

use jkde::estimator::MixedDataset;
use jkde::persist::ModelDocument;

use crate::errors::{CliError, CliResult};

/// Reads a headered CSV into a dataset, taking the named columns as the
/// discrete and continuous blocks (in the order given).
pub fn read_dataset(path: &Path, discrete: &[String], continuous: &[String]) -> CliResult<MixedDataset> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &String| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not found in {}", path.display())))
    };
    let z_cols: Vec<usize> = discrete.iter().map(col_index).collect::<CliResult<_>>()?;
    let x_cols: Vec<usize> = continuous.iter().map(col_index).collect::<CliResult<_>>()?;

    let mut z = Vec::new();
    let mut x = Vec::new();
    let mut rows = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        rows += 1;
        for (&col, name) in z_cols.iter().zip(discrete) {
            let field = record.get(col).unwrap_or("");
            let value: i64 = field.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "row {}, column '{name}': '{field}' is not an integer",
                    row_idx + 1
                ))
            })?;
            z.push(value);
        }
        for (&col, name) in x_cols.iter().zip(continuous) {
            let field = record.get(col).unwrap_or("");
            let value: f64 = field.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "row {}, column '{name}': '{field}' is not a number",
                    row_idx + 1
                ))
            })?;
            x.push(value);
        }
    }
    if rows == 0 {
        return Err(CliError::Data(format!("{}: empty dataset", path.display())));
    }
    MixedDataset::new(z, x, discrete.len(), continuous.len()).map_err(CliError::from)
}

/// Column names from the CSV header, in file order.
pub fn read_headers(path: &Path) -> CliResult<Vec<String>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(reader.headers()?.iter().map(String::from).collect())
}

pub fn read_model(path: &Path) -> CliResult<ModelDocument> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(CliError::from)
}

pub fn write_model(path: &Path, doc: &ModelDocument) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(CliError::from)?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::from)
}
