//! Deterministic train/validation splitting.

use super::table::DataTable;
use super::DataError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SplitMode {
    RandomRow,
    /// Every row of the named groups goes to the held-out set.
    LeaveGroupOut { groups: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl SplitConfig {
    pub fn random(train_fraction: f64, seed: u64) -> Self {
        SplitConfig { train_fraction, seed, mode: SplitMode::RandomRow }
    }

    pub fn leave_group_out(groups: Vec<String>, seed: u64) -> Self {
        SplitConfig { train_fraction: 0.0, seed, mode: SplitMode::LeaveGroupOut { groups } }
    }
}

/// Returns (train, validation) row index sets, each sorted ascending.
/// The two sets are disjoint and cover every row; identical (table, config)
/// inputs always produce identical splits.
pub fn split(table: &DataTable, config: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    let n = table.n_rows();
    match &config.mode {
        SplitMode::RandomRow => {
            if n < 5 {
                return Err(DataError::TooFewRowsForSplit { n, min: 5 });
            }
            let n_train = (config.train_fraction * n as f64).round() as usize;
            if n_train == 0 {
                return Err(DataError::EmptyPartition {
                    fraction: config.train_fraction,
                    n,
                    side: "train",
                });
            }
            if n_train >= n {
                return Err(DataError::EmptyPartition {
                    fraction: config.train_fraction,
                    n,
                    side: "validation",
                });
            }
            let mut indices: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            indices.shuffle(&mut rng);
            let mut train = indices[..n_train].to_vec();
            let mut valid = indices[n_train..].to_vec();
            train.sort_unstable();
            valid.sort_unstable();
            Ok((train, valid))
        }
        SplitMode::LeaveGroupOut { groups } => {
            let labels = table.group_ids();
            let distinct = table.distinct_groups();
            if distinct.len() < 2 {
                return Err(DataError::TooFewGroups(distinct.len()));
            }
            for g in groups {
                if !distinct.contains(g) {
                    return Err(DataError::GroupAbsent(g.clone()));
                }
            }
            let (mut train, mut valid) = (Vec::new(), Vec::new());
            for (i, label) in labels.iter().enumerate() {
                if groups.contains(label) {
                    valid.push(i);
                } else {
                    train.push(i);
                }
            }
            if train.is_empty() {
                return Err(DataError::EmptyPartition { fraction: 0.0, n, side: "train" });
            }
            if valid.is_empty() {
                return Err(DataError::EmptyPartition { fraction: 0.0, n, side: "validation" });
            }
            Ok((train, valid))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{ColumnRole, ColumnSpec};
    use proptest::prelude::*;

    fn numeric_table(n: usize) -> DataTable {
        let cols = vec![
            ColumnSpec::numeric("x", "", ColumnRole::Feature),
            ColumnSpec::numeric("y", "", ColumnRole::Target),
        ];
        let data: Vec<f64> = (0..n).flat_map(|i| [i as f64, (i * i) as f64]).collect();
        DataTable::new(cols, data, n)
    }

    fn grouped_table() -> DataTable {
        let mut cols = vec![
            ColumnSpec::categorical("cell", ColumnRole::GroupId),
            ColumnSpec::numeric("y", "", ColumnRole::Target),
        ];
        cols[0].categories = Some(vec!["Cell1".into(), "Cell4".into(), "Cell2".into()]);
        let rows: Vec<f64> = vec![0.0, 0.1, 1.0, 0.2, 0.0, 0.3, 1.0, 0.4, 2.0, 0.5];
        DataTable::new(cols, rows, 5)
    }

    #[test]
    fn ninety_ten_counts() {
        let t = numeric_table(10);
        let (train, valid) = split(&t, &SplitConfig::random(0.9, 0)).unwrap();
        assert_eq!(train.len(), 9);
        assert_eq!(valid.len(), 1);
    }

    #[test]
    fn same_seed_same_split() {
        let t = numeric_table(20);
        let cfg = SplitConfig::random(0.7, 42);
        assert_eq!(split(&t, &cfg).unwrap(), split(&t, &cfg).unwrap());
    }

    #[test]
    fn leave_group_out_isolates_group() {
        let t = grouped_table();
        let cfg = SplitConfig::leave_group_out(vec!["Cell4".into()], 0);
        let (train, valid) = split(&t, &cfg).unwrap();
        let labels = t.group_ids();
        assert!(valid.iter().all(|&i| labels[i] == "Cell4"));
        assert!(train.iter().all(|&i| labels[i] != "Cell4"));
        assert_eq!(valid.len(), 2);
    }

    #[test]
    fn absent_group_errors() {
        let t = grouped_table();
        let cfg = SplitConfig::leave_group_out(vec!["Cell9".into()], 0);
        assert!(matches!(split(&t, &cfg), Err(DataError::GroupAbsent(_))));
    }

    #[test]
    fn empty_partition_errors() {
        let t = numeric_table(10);
        assert!(matches!(
            split(&t, &SplitConfig::random(0.99, 0)),
            Err(DataError::EmptyPartition { side: "validation", .. })
        ));
        assert!(matches!(
            split(&t, &SplitConfig::random(0.01, 0)),
            Err(DataError::EmptyPartition { side: "train", .. })
        ));
    }

    proptest! {
        #[test]
        fn split_partitions_rows(n in 5usize..200, seed in 0u64..1000, frac in 0.05f64..0.95) {
            let t = numeric_table(n);
            prop_assume!(split(&t, &SplitConfig::random(frac, seed)).is_ok());
            let (train, valid) = split(&t, &SplitConfig::random(frac, seed)).unwrap();
            let mut all: Vec<usize> = train.iter().chain(valid.iter()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(train.len(), (frac * n as f64).round() as usize);
        }

        #[test]
        fn sizes_invariant_under_row_permutation(n in 5usize..100, seed in 0u64..100) {
            // membership may change with row order, sizes may not
            let t = numeric_table(n);
            let cfg = SplitConfig::random(0.8, seed);
            let (train_a, valid_a) = split(&t, &cfg).unwrap();
            let reversed: Vec<usize> = (0..n).rev().collect();
            let t_rev = t.select_rows(&reversed);
            let (train_b, valid_b) = split(&t_rev, &cfg).unwrap();
            prop_assert_eq!(train_a.len(), train_b.len());
            prop_assert_eq!(valid_a.len(), valid_b.len());
        }
    }
}
