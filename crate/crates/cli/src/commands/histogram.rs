use std::path::Path;

use anonypipe_core::metrics::{histogram, Histogram};

use crate::error::{CliError, CliResult};

/// Values of `column` in the CSV file at `path`.
pub fn read_column(path: &Path, column: &str) -> CliResult<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::usage(format!("{}: no column {column:?}", path.display())))?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("");
        let v: f64 = field.trim().parse().map_err(|_| {
            CliError::failure(format!(
                "{} row {}: {field:?} is not a number",
                path.display(),
                row + 1
            ))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn run_histogram(
    input: &Path,
    column: &str,
    bins: usize,
    lo: f64,
    hi: f64,
) -> CliResult<Histogram> {
    let values = read_column(input, column)?;
    histogram(&values, bins, lo, hi).map_err(|e| CliError::usage(e.to_string()))
}
