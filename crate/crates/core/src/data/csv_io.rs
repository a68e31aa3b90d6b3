//! Strict CSV ingestion against a declared schema.

use super::schema::{ColumnKind, Schema};
use super::table::DataTable;
use super::DataError;
use std::path::Path;

/// Loads a CSV file whose header must match the schema column names in
/// order. Numeric cells are parsed as `f64`; categorical and group-id cells
/// collect their level strings in first-appearance order. Row order is
/// preserved and nothing is curated here.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<DataTable, DataError> {
    schema.validate()?;
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    if headers.len() != schema.columns.len() {
        return Err(DataError::HeaderWidth {
            expected: schema.columns.len(),
            found: headers.len(),
        });
    }
    for (i, (have, want)) in headers.iter().zip(&schema.columns).enumerate() {
        if have != want.name {
            return Err(DataError::HeaderMismatch {
                index: i,
                expected: want.name.clone(),
                found: have.to_string(),
            });
        }
    }

    let mut columns = schema.columns.clone();
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); columns.len()];
    let mut data: Vec<f64> = Vec::new();
    let mut n_rows = 0usize;

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, cell) in record.iter().enumerate() {
            let spec = &columns[col];
            if cell.is_empty() {
                return Err(DataError::MissingValue {
                    line,
                    column: spec.name.clone(),
                });
            }
            let value = match spec.kind {
                ColumnKind::Numeric => {
                    cell.parse::<f64>().map_err(|_| DataError::NonNumericCell {
                        line,
                        column: spec.name.clone(),
                        value: cell.to_string(),
                    })?
                }
                ColumnKind::Categorical => {
                    let lv = &mut levels[col];
                    let idx = match lv.iter().position(|l| l == cell) {
                        Some(i) => i,
                        None => {
                            lv.push(cell.to_string());
                            lv.len() - 1
                        }
                    };
                    idx as f64
                }
            };
            data.push(value);
        }
        n_rows += 1;
    }

    if n_rows == 0 {
        return Err(DataError::EmptyBody);
    }

    for (col, spec) in columns.iter_mut().enumerate() {
        if spec.kind == ColumnKind::Categorical {
            spec.categories = Some(std::mem::take(&mut levels[col]));
        }
    }

    Ok(DataTable::new(columns, data, n_rows))
}
