//! Dataset curation: duplicate removal, one-hot expansion and the
//! correlated-descriptor filter.

use super::schema::{ColumnKind, ColumnRole, ColumnSpec};
use super::table::DataTable;
use super::DataError;
use crate::metrics::pairwise_sum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct CurateOptions {
    /// Feature pairs with |Pearson r| at or above this are reduced to one
    /// column. The cutoff is a conventional collinearity screen.
    pub corr_threshold: f64,
    /// Remove exact duplicate rows.
    pub dedup: bool,
}

impl Default for CurateOptions {
    fn default() -> Self {
        CurateOptions { corr_threshold: 0.9, dedup: true }
    }
}

/// One curation action; serialized as `{action, column/row, reason}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurationEntry {
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CurationLog {
    pub entries: Vec<CurationEntry>,
}

impl CurationLog {
    fn column(&mut self, action: &str, column: &str, reason: String) {
        self.entries.push(CurationEntry {
            action: action.to_string(),
            column: Some(column.to_string()),
            row: None,
            reason,
        });
    }

    fn row(&mut self, action: &str, row: usize, reason: String) {
        self.entries.push(CurationEntry {
            action: action.to_string(),
            column: None,
            row: Some(row),
            reason,
        });
    }

    fn note(&mut self, reason: String) {
        self.entries.push(CurationEntry {
            action: "note".to_string(),
            column: None,
            row: None,
            reason,
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("log serializes")
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = pairwise_sum(a) / n;
    let mb = pairwise_sum(b) / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0; // constant column: correlation undefined, treated as none
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Runs the curation pass: duplicate rows out (when `dedup`), categorical
/// columns expanded to one-hot indicators, and for every pair of plain
/// numeric features with |Pearson r| >= threshold the later-declared column
/// is dropped. Each action is logged with its reason. Errors when fewer than
/// two rows remain or the target is constant.
///
/// Indicator columns produced by one-hot expansion are exempt from the
/// correlation filter so the per-row indicator sum stays 1 and repeated
/// curation is a no-op.
pub fn curate(
    table: &DataTable,
    opts: &CurateOptions,
) -> Result<(DataTable, CurationLog), DataError> {
    if !(opts.corr_threshold > 0.0 && opts.corr_threshold <= 1.0) {
        return Err(DataError::BadCorrThreshold(opts.corr_threshold));
    }
    let mut log = CurationLog::default();

    // 1. exact duplicate rows
    let keep_rows: Vec<usize> = if opts.dedup {
        let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
        let mut keep = Vec::with_capacity(table.n_rows());
        for i in 0..table.n_rows() {
            let key: Vec<u64> = table.row(i).iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                keep.push(i);
            } else {
                log.row("drop-row", i, "exact duplicate of an earlier row".into());
            }
        }
        keep
    } else {
        (0..table.n_rows()).collect()
    };
    let table = table.select_rows(&keep_rows);

    // 2. one-hot expansion of categorical feature columns
    let mut columns: Vec<ColumnSpec> = Vec::new();
    let mut col_sources: Vec<(usize, Option<usize>)> = Vec::new(); // (src col, level)
    for (idx, spec) in table.columns().iter().enumerate() {
        let expand = spec.kind == ColumnKind::Categorical && spec.role == ColumnRole::Feature;
        if !expand {
            columns.push(spec.clone());
            col_sources.push((idx, None));
            continue;
        }
        let levels = spec.categories.clone().unwrap_or_default();
        for (li, level) in levels.iter().enumerate() {
            let mut one_hot = ColumnSpec::numeric(
                &format!("{}={}", spec.name, level),
                &spec.unit,
                ColumnRole::Feature,
            );
            one_hot.one_hot_parent = Some(spec.name.clone());
            columns.push(one_hot);
            col_sources.push((idx, Some(li)));
        }
        log.column(
            "one-hot-expand",
            &spec.name,
            format!("categorical column expanded into {} indicators", levels.len()),
        );
    }
    let mut data = Vec::with_capacity(table.n_rows() * columns.len());
    for row in 0..table.n_rows() {
        for &(src, level) in &col_sources {
            let v = table.value(row, src);
            data.push(match level {
                None => v,
                Some(li) => {
                    if v as usize == li {
                        1.0
                    } else {
                        0.0
                    }
                }
            });
        }
    }
    let table = DataTable::from_parts(columns, data, table.n_rows());

    // 3. correlation filter over plain numeric features (indicator columns
    //    and the time column are exempt; noted for the record)
    let candidates: Vec<usize> = table
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.role == ColumnRole::Feature
                && c.kind == ColumnKind::Numeric
                && c.one_hot_parent.is_none()
        })
        .map(|(i, _)| i)
        .collect();
    let mut dropped = vec![false; table.n_cols()];
    for (a_pos, &a) in candidates.iter().enumerate() {
        if dropped[a] {
            continue;
        }
        let col_a = table.column_values(a);
        for &b in &candidates[a_pos + 1..] {
            if dropped[b] {
                continue;
            }
            let r = pearson(&col_a, &table.column_values(b));
            if r.abs() >= opts.corr_threshold {
                dropped[b] = true;
                log.column(
                    "drop-column",
                    &table.columns()[b].name,
                    format!(
                        "|Pearson r| = {:.4} with earlier column '{}' (threshold {})",
                        r.abs(),
                        table.columns()[a].name,
                        opts.corr_threshold
                    ),
                );
            }
        }
    }
    let table = if dropped.iter().any(|&d| d) {
        let keep: Vec<usize> = (0..table.n_cols()).filter(|&i| !dropped[i]).collect();
        let columns: Vec<ColumnSpec> = keep.iter().map(|&i| table.columns()[i].clone()).collect();
        let mut data = Vec::with_capacity(table.n_rows() * keep.len());
        for row in 0..table.n_rows() {
            for &col in &keep {
                data.push(table.value(row, col));
            }
        }
        DataTable::from_parts(columns, data, table.n_rows())
    } else {
        table
    };
    log.note(
        "filters applied: exact duplicates, |Pearson r| collinearity; further noise \
         filters are not implemented"
            .into(),
    );

    // 4. structural checks
    if table.n_rows() < 2 {
        return Err(DataError::TooFewRows { remaining: table.n_rows() });
    }
    let target = table.target();
    let spread = target.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - target.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread > 0.0) {
        return Err(DataError::ConstantTarget(
            table.columns()[table.target_index()].name.clone(),
        ));
    }

    Ok((table, log))
}

/// Divides each row's target by its group's value at the earliest time
/// (first row of the group when no time column exists), reproducing the
/// normalized degradation plots.
pub fn normalize_target(table: &DataTable) -> Result<DataTable, DataError> {
    let groups = table.group_ids();
    let target = table.target();
    let time = table
        .time_index()
        .map(|i| table.column_values(i))
        .unwrap_or_else(|| (0..table.n_rows()).map(|i| i as f64).collect());

    let mut initial: std::collections::BTreeMap<&str, (f64, f64)> = Default::default();
    for i in 0..table.n_rows() {
        let entry = initial
            .entry(groups[i].as_str())
            .or_insert((f64::INFINITY, f64::NAN));
        if time[i] < entry.0 {
            *entry = (time[i], target[i]);
        }
    }
    for (group, (_, v)) in &initial {
        if *v == 0.0 || !v.is_finite() {
            return Err(DataError::ZeroInitialTarget { group: group.to_string() });
        }
    }
    let normalized: Vec<f64> = (0..table.n_rows())
        .map(|i| target[i] / initial[groups[i].as_str()].1)
        .collect();
    Ok(table.with_target(normalized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{ColumnRole, ColumnSpec, Schema};

    fn table(cols: Vec<ColumnSpec>, rows: &[&[f64]]) -> DataTable {
        Schema::new(cols.clone()).unwrap();
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DataTable::new(cols, data, rows.len())
    }

    fn xy_cols() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::numeric("a", "", ColumnRole::Feature),
            ColumnSpec::numeric("b", "", ColumnRole::Feature),
            ColumnSpec::numeric("y", "", ColumnRole::Target),
        ]
    }

    #[test]
    fn perfectly_correlated_column_dropped() {
        let t = table(
            xy_cols(),
            &[&[1.0, 2.0, 0.1], &[2.0, 4.0, 0.4], &[3.0, 6.0, 0.2], &[4.0, 8.0, 0.9]],
        );
        let (curated, log) = curate(&t, &CurateOptions::default()).unwrap();
        assert_eq!(curated.n_cols(), 2);
        assert_eq!(curated.columns()[0].name, "a"); // earlier-declared kept
        assert!(log.entries.iter().any(|e| e.action == "drop-column"));
    }

    #[test]
    fn near_collinear_feature_dropped_at_095() {
        // b = 2a + tiny noise; oracle: Pearson r computed by direct formula
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let noise = [0.01, -0.02, 0.015, -0.005, 0.02, -0.01];
        let rows: Vec<Vec<f64>> = a
            .iter()
            .zip(&noise)
            .enumerate()
            .map(|(i, (x, e))| vec![*x, 2.0 * x + e, (i as f64).sin()])
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let t = table(xy_cols(), &refs);

        // independent oracle for r
        let n = a.len() as f64;
        let bcol: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let ma = a.iter().sum::<f64>() / n;
        let mb = bcol.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(&bcol).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = bcol.iter().map(|y| (y - mb) * (y - mb)).sum();
        let r_oracle = cov / (va.sqrt() * vb.sqrt());
        assert!(r_oracle >= 0.95, "constructed pair must correlate, r = {r_oracle}");

        let opts = CurateOptions { corr_threshold: 0.95, dedup: true };
        let (curated, _) = curate(&t, &opts).unwrap();
        assert!(curated.column_index("b").is_none());
        assert!(curated.column_index("a").is_some());
    }

    #[test]
    fn exact_duplicate_row_removed() {
        let t = table(
            xy_cols(),
            &[&[1.0, 9.0, 0.1], &[1.0, 9.0, 0.1], &[2.0, 1.0, 0.7]],
        );
        let (curated, log) = curate(&t, &CurateOptions::default()).unwrap();
        assert_eq!(curated.n_rows(), 2);
        assert!(log.entries.iter().any(|e| e.action == "drop-row" && e.row == Some(1)));
    }

    #[test]
    fn dedup_off_keeps_duplicates() {
        let t = table(
            xy_cols(),
            &[&[1.0, 9.0, 0.1], &[1.0, 9.0, 0.1], &[2.0, 1.0, 0.7]],
        );
        let opts = CurateOptions { dedup: false, ..Default::default() };
        let (curated, _) = curate(&t, &opts).unwrap();
        assert_eq!(curated.n_rows(), 3);
    }

    #[test]
    fn one_hot_expansion_preserves_rows_and_sums_to_one() {
        let mut cols = vec![
            ColumnSpec::categorical("solvent", ColumnRole::Feature),
            ColumnSpec::numeric("x", "", ColumnRole::Feature),
            ColumnSpec::numeric("y", "", ColumnRole::Target),
        ];
        cols[0].categories = Some(vec!["dmf".into(), "cb".into(), "tol".into()]);
        let t = table(
            cols,
            &[&[0.0, 1.0, 0.2], &[1.0, 2.0, 0.4], &[2.0, 3.0, 0.1], &[1.0, 4.0, 0.8]],
        );
        let (curated, _) = curate(&t, &CurateOptions::default()).unwrap();
        assert_eq!(curated.n_rows(), 4);
        let indicator_cols: Vec<usize> = curated
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.one_hot_parent.as_deref() == Some("solvent"))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(indicator_cols.len(), 3);
        for row in 0..curated.n_rows() {
            let sum: f64 = indicator_cols.iter().map(|&c| curated.value(row, c)).sum();
            assert_eq!(sum, 1.0);
        }
        assert_eq!(curated.columns()[0].name, "solvent=dmf");
    }

    #[test]
    fn curation_is_idempotent() {
        let mut cols = vec![
            ColumnSpec::categorical("kindof", ColumnRole::Feature),
            ColumnSpec::numeric("a", "", ColumnRole::Feature),
            ColumnSpec::numeric("b", "", ColumnRole::Feature),
            ColumnSpec::numeric("y", "", ColumnRole::Target),
        ];
        cols[0].categories = Some(vec!["p".into(), "q".into()]);
        let t = table(
            cols,
            &[
                &[0.0, 1.0, 2.0, 0.3],
                &[1.0, 2.0, 4.0, 0.1],
                &[0.0, 3.0, 6.0, 0.9],
                &[1.0, 4.0, 8.1, 0.5],
            ],
        );
        let opts = CurateOptions::default();
        let (once, _) = curate(&t, &opts).unwrap();
        let (twice, log) = curate(&once, &opts).unwrap();
        assert_eq!(once, twice);
        assert!(log
            .entries
            .iter()
            .all(|e| e.action != "drop-column" && e.action != "drop-row"));
    }

    #[test]
    fn aborts_on_tiny_or_constant_results() {
        let t = table(xy_cols(), &[&[1.0, 0.0, 0.5]]);
        assert!(matches!(
            curate(&t, &CurateOptions::default()),
            Err(DataError::TooFewRows { remaining: 1 })
        ));
        let t = table(xy_cols(), &[&[1.0, 0.0, 0.5], &[2.0, 3.0, 0.5]]);
        assert!(matches!(
            curate(&t, &CurateOptions::default()),
            Err(DataError::ConstantTarget(_))
        ));
    }

    #[test]
    fn normalization_divides_by_group_initial() {
        let mut cols = vec![
            ColumnSpec::categorical("cell", ColumnRole::GroupId),
            ColumnSpec::numeric("time_days", "", ColumnRole::Time),
            ColumnSpec::numeric("pce", "", ColumnRole::Target),
        ];
        cols[0].categories = Some(vec!["c1".into(), "c2".into()]);
        let t = table(
            cols,
            &[
                &[0.0, 0.0, 0.04],
                &[0.0, 10.0, 0.02],
                &[1.0, 0.0, 0.03],
                &[1.0, 10.0, 0.015],
            ],
        );
        let normalized = normalize_target(&t).unwrap();
        let y = normalized.target();
        assert_eq!(y, vec![1.0, 0.5, 1.0, 0.5]);
    }
}
