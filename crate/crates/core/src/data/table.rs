//! The in-memory dataset and the feature-matrix view handed to learners.

use super::schema::{ColumnKind, ColumnRole, ColumnSpec};
use super::DataError;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Curated tabular dataset: ordered column specs plus a row-major numeric
/// matrix. Categorical and group-id cells store level indices into the
/// column's `categories` list. Read-only after construction; share freely
/// across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    columns: Vec<ColumnSpec>,
    data: Vec<f64>,
    n_rows: usize,
}

impl DataTable {
    pub fn new(columns: Vec<ColumnSpec>, data: Vec<f64>, n_rows: usize) -> Self {
        assert_eq!(data.len(), n_rows * columns.len(), "matrix shape mismatch");
        DataTable { columns, data, n_rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.columns.len();
        &self.data[i * m..(i + 1) * m]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.columns.len() + col]
    }

    pub fn column_values(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.value(i, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    fn role_index(&self, role: ColumnRole) -> Option<usize> {
        self.columns.iter().position(|c| c.role == role)
    }

    pub fn target_index(&self) -> usize {
        self.role_index(ColumnRole::Target)
            .expect("schema validation guarantees a target column")
    }

    pub fn time_index(&self) -> Option<usize> {
        self.role_index(ColumnRole::Time)
    }

    pub fn group_index(&self) -> Option<usize> {
        self.role_index(ColumnRole::GroupId)
    }

    pub fn target(&self) -> Vec<f64> {
        self.column_values(self.target_index())
    }

    pub fn time_values(&self) -> Result<Vec<f64>, DataError> {
        self.time_index()
            .map(|i| self.column_values(i))
            .ok_or(DataError::MissingRole("time"))
    }

    /// Per-row device label, or `""` when the table has no group column.
    pub fn group_ids(&self) -> Vec<String> {
        match self.group_index() {
            None => vec![String::new(); self.n_rows],
            Some(col) => {
                let levels = self.columns[col]
                    .categories
                    .as_deref()
                    .unwrap_or(&[]);
                (0..self.n_rows)
                    .map(|i| {
                        let idx = self.value(i, col) as usize;
                        levels.get(idx).cloned().unwrap_or_default()
                    })
                    .collect()
            }
        }
    }

    pub fn distinct_groups(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for g in self.group_ids() {
            if !seen.contains(&g) {
                seen.push(g);
            }
        }
        seen
    }

    /// Predictor view: every feature-role and time-role column, in
    /// declaration order. The time column participates as a predictor and
    /// additionally drives cutoff selection.
    pub fn features(&self) -> Features {
        let indices: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.role, ColumnRole::Feature | ColumnRole::Time))
            .map(|(i, _)| i)
            .collect();
        let names = indices.iter().map(|&i| self.columns[i].name.clone()).collect();
        let mut data = Vec::with_capacity(self.n_rows * indices.len());
        for row in 0..self.n_rows {
            for &col in &indices {
                data.push(self.value(row, col));
            }
        }
        Features::new(names, data, self.n_rows)
    }

    /// New table containing only the given rows (indices in ascending order).
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        let m = self.columns.len();
        let mut data = Vec::with_capacity(rows.len() * m);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        DataTable::new(self.columns.clone(), data, rows.len())
    }

    /// Replaces the target column values (used by target normalization).
    pub(crate) fn with_target(&self, target: Vec<f64>) -> DataTable {
        assert_eq!(target.len(), self.n_rows);
        let t = self.target_index();
        let mut out = self.clone();
        for (i, v) in target.into_iter().enumerate() {
            out.data[i * out.columns.len() + t] = v;
        }
        out
    }

    pub(crate) fn from_parts(columns: Vec<ColumnSpec>, data: Vec<f64>, n_rows: usize) -> Self {
        DataTable::new(columns, data, n_rows)
    }

    /// Writes the table as CSV with the header row. Categorical and group-id
    /// cells are written as their level strings, numerics via the shortest
    /// round-trip decimal form; output is byte-deterministic.
    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        let mut out = String::new();
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for row in 0..self.n_rows {
            let mut cells = Vec::with_capacity(self.columns.len());
            for (col, spec) in self.columns.iter().enumerate() {
                let v = self.value(row, col);
                match (&spec.kind, &spec.categories) {
                    (ColumnKind::Categorical, Some(levels)) => {
                        cells.push(levels[v as usize].clone());
                    }
                    _ => cells.push(format!("{v}")),
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Row-major predictor matrix with column names; the unit of exchange
/// between the dataset and the learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    names: Vec<String>,
    data: Vec<f64>,
    n_rows: usize,
}

impl Features {
    pub fn new(names: Vec<String>, data: Vec<f64>, n_rows: usize) -> Self {
        assert_eq!(data.len(), n_rows * names.len(), "matrix shape mismatch");
        Features { names, data, n_rows }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.names.len();
        &self.data[i * m..(i + 1) * m]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.names.len() + col]
    }

    pub fn set_value(&mut self, row: usize, col: usize, v: f64) {
        let m = self.names.len();
        self.data[row * m + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.value(i, col)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.names.len().max(1))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Features {
        let m = self.names.len();
        let mut data = Vec::with_capacity(rows.len() * m);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Features::new(self.names.clone(), data, rows.len())
    }

    /// Reorders/subsets columns to the requested names; errors on a missing
    /// column. Used when applying a persisted model to freshly curated data.
    pub fn select_columns(&self, names: &[String]) -> Result<Features, DataError> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|have| have == n)
                    .ok_or_else(|| DataError::UnknownColumn(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut data = Vec::with_capacity(self.n_rows * indices.len());
        for row in 0..self.n_rows {
            for &col in &indices {
                data.push(self.value(row, col));
            }
        }
        Ok(Features::new(names.to_vec(), data, self.n_rows))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
