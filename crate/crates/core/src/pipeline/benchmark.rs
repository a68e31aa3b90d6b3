//! The benchmark sweep: algorithm × split size × feature-filter variant per
//! time cutoff, champion selection by validation RMSE, and the follow-up
//! verification/attribution/outlier passes on the champion.

use super::config::BenchmarkConfig;
use super::outliers::detect_outliers;
use super::shapley::{shapley, ShapleyResult, MAX_SHAPLEY_FEATURES};
use super::verify::{verify, VerificationResult};
use super::PipelineError;
use crate::data::{split, DataTable, SplitConfig};
use crate::learners::{
    hyperparam_search, permutation_importance, train, FeatureImportance, LearnerSpec,
    TrainedModel,
};
use crate::metrics::MetricsBundle;
use crate::seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub feature_names: Vec<String>,
    pub groups: Vec<String>,
}

/// One sweep cell. Failed cells stay in the report with their error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub cutoff: f64,
    pub family: String,
    pub train_fraction: f64,
    pub pfi_filtered: bool,
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<LearnerSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    pub candidates_evaluated: usize,
    /// Metrics on the training partition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_metrics: Option<MetricsBundle>,
    /// Metrics on the validation partition (champion selection key).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_metrics: Option<MetricsBundle>,
}

impl SweepEntry {
    /// Table 9 style label, e.g. `RF-90-10` or `GB-80-20-PFI`.
    pub fn label(&self) -> String {
        let train = (self.train_fraction * 100.0).round() as u32;
        let valid = 100 - train;
        let mut label = format!("{}-{}-{}", self.family, train, valid);
        if self.pfi_filtered {
            label.push_str("-PFI");
        }
        label
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffChampions {
    pub cutoff: f64,
    /// Entry index with minimal validation RMSE.
    pub by_rmse: usize,
    /// Entry index with maximal validation R² (reported for comparison).
    pub by_r2: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChampionSummary {
    pub cutoff: f64,
    pub entry_index: usize,
    pub label: String,
    pub spec: LearnerSpec,
    pub feature_names: Vec<String>,
    pub valid_metrics: MetricsBundle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Attribution {
    pub pfi: FeatureImportance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shapley: Option<ShapleyResult>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub row: usize,
    pub group: String,
    pub time: f64,
    pub observed: f64,
    pub predicted: f64,
    pub standardized_residual: f64,
}

/// Observed-vs-predicted pair for one row, ordered by (group, day).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRow {
    pub group: String,
    pub time: f64,
    pub observed: f64,
    pub predicted: f64,
}

/// The full benchmark result; serializes to canonical JSON (struct field
/// order, no timestamps), so identical runs are byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format_version: u64,
    pub config: BenchmarkConfig,
    pub dataset: DatasetSummary,
    pub entries: Vec<SweepEntry>,
    pub champions: Vec<CutoffChampions>,
    pub champion: ChampionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribution: Option<Attribution>,
    pub outliers: Vec<OutlierRecord>,
    pub notes: Vec<String>,
}

/// Report plus the live champion artifacts that do not belong in JSON.
pub struct BenchmarkOutcome {
    pub report: BenchmarkReport,
    pub champion_model: TrainedModel,
    /// Champion validation rows, ordered by (group, day).
    pub champion_rows: Vec<PredictionRow>,
}

/// Rows with time at or below the cutoff.
pub fn cut_by_time(table: &DataTable, cutoff: f64) -> Result<DataTable, PipelineError> {
    let time = table.time_values()?;
    let rows: Vec<usize> = (0..table.n_rows()).filter(|&i| time[i] <= cutoff).collect();
    if rows.is_empty() {
        let earliest = time.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(PipelineError::EmptyCutoffWindow { cutoff, earliest });
    }
    Ok(table.select_rows(&rows))
}

struct EntryJob {
    cutoff_idx: usize,
    family_idx: usize,
    fraction_idx: usize,
    pfi_filtered: bool,
    seed_idx: usize,
}

struct EntryOutput {
    spec: LearnerSpec,
    feature_names: Vec<String>,
    candidates: usize,
    model: TrainedModel,
    train_metrics: MetricsBundle,
    valid_metrics: MetricsBundle,
    train_idx: Vec<usize>,
    valid_idx: Vec<usize>,
    split_cfg: SplitConfig,
}

fn entry_seed(config: &BenchmarkConfig, job: &EntryJob) -> u64 {
    seed::derive(
        config.seeds[job.seed_idx],
        &[
            seed::label("entry"),
            job.cutoff_idx as u64,
            job.family_idx as u64,
            job.fraction_idx as u64,
            u64::from(job.pfi_filtered),
        ],
    )
}

fn run_entry(
    cut: &DataTable,
    config: &BenchmarkConfig,
    job: &EntryJob,
) -> Result<EntryOutput, PipelineError> {
    let family = &config.families[job.family_idx];
    let fraction = config.train_fractions[job.fraction_idx];
    let base = entry_seed(config, job);
    let split_cfg = SplitConfig::random(fraction, seed::derive(base, &[seed::label("split")]));
    let (train_idx, valid_idx) = split(cut, &split_cfg)?;

    let features = cut.features();
    let target = cut.target();
    let y_train: Vec<f64> = train_idx.iter().map(|&i| target[i]).collect();
    let y_valid: Vec<f64> = valid_idx.iter().map(|&i| target[i]).collect();

    let train_seed = seed::derive(base, &[seed::label("train")]);
    let mut used_names: Vec<String> = features.names().to_vec();
    let mut x_train = features.select_rows(&train_idx);
    let mut x_valid = features.select_rows(&valid_idx);

    let mut search = hyperparam_search(
        family,
        &x_train,
        &y_train,
        &x_valid,
        &y_valid,
        config.search_budget,
        train_seed,
    )?;
    let mut candidates = search.evaluations.len();

    if job.pfi_filtered {
        let probe = train(&search.best, &x_train, &y_train)?;
        let importance = permutation_importance(
            &probe,
            &x_valid,
            &y_valid,
            config.pfi_repeats,
            seed::derive(base, &[seed::label("pfi")]),
        )?;
        let kept = importance.filter_names(config.pfi_filter_fraction);
        if kept.len() < used_names.len() {
            used_names = kept;
            x_train = x_train.select_columns(&used_names)?;
            x_valid = x_valid.select_columns(&used_names)?;
            search = hyperparam_search(
                family,
                &x_train,
                &y_train,
                &x_valid,
                &y_valid,
                config.search_budget,
                seed::derive(base, &[seed::label("train-filtered")]),
            )?;
            candidates += search.evaluations.len();
        }
    }

    let model = train(&search.best, &x_train, &y_train)?;
    let predictions = model.predict(&x_valid)?;
    let valid_metrics = MetricsBundle::compute(&y_valid, &predictions)?;
    Ok(EntryOutput {
        spec: model.spec.clone(),
        feature_names: used_names,
        candidates,
        train_metrics: model.training_metrics.clone(),
        valid_metrics,
        model,
        train_idx,
        valid_idx,
        split_cfg,
    })
}

fn champion_indices(entries: &[SweepEntry], cutoff: f64) -> Option<(usize, usize)> {
    let ok = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.cutoff == cutoff && e.status == "ok");
    let by_rmse = ok
        .clone()
        .min_by(|(_, a), (_, b)| {
            a.valid_metrics
                .as_ref()
                .unwrap()
                .rmse
                .total_cmp(&b.valid_metrics.as_ref().unwrap().rmse)
        })
        .map(|(i, _)| i)?;
    let by_r2 = ok
        .filter(|(_, e)| e.valid_metrics.as_ref().unwrap().r2.is_some())
        .max_by(|(_, a), (_, b)| {
            a.valid_metrics
                .as_ref()
                .unwrap()
                .r2
                .unwrap()
                .total_cmp(&b.valid_metrics.as_ref().unwrap().r2.unwrap())
        })
        .map(|(i, _)| i)
        .unwrap_or(by_rmse);
    Some((by_rmse, by_r2))
}

/// Runs the full sweep. Individual cells may fail (they stay in the report
/// as failed); the run itself fails only for structural reasons such as an
/// empty cutoff window or no surviving champion.
pub fn run_benchmark(
    table: &DataTable,
    config: &BenchmarkConfig,
) -> Result<BenchmarkOutcome, PipelineError> {
    let mut config = config.clone();
    config.validate()?;

    let cut_tables: Vec<DataTable> = config
        .time_cutoffs
        .iter()
        .map(|&c| cut_by_time(table, c))
        .collect::<Result<_, _>>()?;

    let mut jobs = Vec::new();
    for cutoff_idx in 0..config.time_cutoffs.len() {
        for family_idx in 0..config.families.len() {
            for fraction_idx in 0..config.train_fractions.len() {
                for &pfi_filtered in &config.pfi_variants {
                    for seed_idx in 0..config.seeds.len() {
                        jobs.push(EntryJob {
                            cutoff_idx,
                            family_idx,
                            fraction_idx,
                            pfi_filtered,
                            seed_idx,
                        });
                    }
                }
            }
        }
    }

    let entries: Vec<SweepEntry> = jobs
        .par_iter()
        .map(|job| {
            let mut entry = SweepEntry {
                cutoff: config.time_cutoffs[job.cutoff_idx],
                family: config.families[job.family_idx].clone(),
                train_fraction: config.train_fractions[job.fraction_idx],
                pfi_filtered: job.pfi_filtered,
                seed: config.seeds[job.seed_idx],
                status: "ok".into(),
                error: None,
                spec: None,
                feature_names: None,
                candidates_evaluated: 0,
                train_metrics: None,
                valid_metrics: None,
            };
            match run_entry(&cut_tables[job.cutoff_idx], &config, job) {
                Ok(output) => {
                    entry.spec = Some(output.spec);
                    entry.feature_names = Some(output.feature_names);
                    entry.candidates_evaluated = output.candidates;
                    entry.train_metrics = Some(output.train_metrics);
                    entry.valid_metrics = Some(output.valid_metrics);
                }
                Err(err) => {
                    entry.status = "failed".into();
                    entry.error = Some(err.to_string());
                }
            }
            entry
        })
        .collect();

    let champions: Vec<CutoffChampions> = config
        .time_cutoffs
        .iter()
        .filter_map(|&cutoff| {
            champion_indices(&entries, cutoff)
                .map(|(by_rmse, by_r2)| CutoffChampions { cutoff, by_rmse, by_r2 })
        })
        .collect();
    let final_cutoff = *config.time_cutoffs.last().expect("validated non-empty");
    let overall = champions
        .iter()
        .find(|c| c.cutoff == final_cutoff)
        .ok_or(PipelineError::NoChampion { cutoff: final_cutoff })?;
    let champion_entry = &entries[overall.by_rmse];

    // rebuild the champion deterministically from its coordinates
    let job = EntryJob {
        cutoff_idx: config.time_cutoffs.len() - 1,
        family_idx: config
            .families
            .iter()
            .position(|f| *f == champion_entry.family)
            .expect("champion family is configured"),
        fraction_idx: config
            .train_fractions
            .iter()
            .position(|f| *f == champion_entry.train_fraction)
            .expect("champion fraction is configured"),
        pfi_filtered: champion_entry.pfi_filtered,
        seed_idx: config
            .seeds
            .iter()
            .position(|s| *s == champion_entry.seed)
            .expect("champion seed is configured"),
    };
    let cut = &cut_tables[config.time_cutoffs.len() - 1];
    let rebuilt = run_entry(cut, &config, &job)?;
    let mut champion_model = rebuilt.model.clone();
    let groups = cut.group_ids();
    champion_model.training_groups =
        rebuilt.train_idx.iter().map(|&i| groups[i].clone()).collect();

    let champion = ChampionSummary {
        cutoff: final_cutoff,
        entry_index: overall.by_rmse,
        label: champion_entry.label(),
        spec: rebuilt.spec.clone(),
        feature_names: rebuilt.feature_names.clone(),
        valid_metrics: rebuilt.valid_metrics.clone(),
    };

    // champion predicted-vs-observed rows on its validation partition
    let features = cut.features().select_columns(&rebuilt.feature_names)?;
    let target = cut.target();
    let time = cut.time_values()?;
    let mut champion_rows: Vec<PredictionRow> = rebuilt
        .valid_idx
        .iter()
        .map(|&i| PredictionRow {
            group: groups[i].clone(),
            time: time[i],
            observed: target[i],
            predicted: champion_model.predict_row(features.row(i)),
        })
        .collect();
    champion_rows.sort_by(|a, b| a.group.cmp(&b.group).then(a.time.total_cmp(&b.time)));

    let verification = if config.include_verification {
        Some(verify(
            &rebuilt.spec,
            cut,
            &rebuilt.split_cfg,
            config.k_folds,
            Some(&rebuilt.feature_names),
        )?)
    } else {
        None
    };

    let attribution = if config.include_attribution {
        let x_valid = features.select_rows(&rebuilt.valid_idx);
        let y_valid: Vec<f64> = rebuilt.valid_idx.iter().map(|&i| target[i]).collect();
        let pfi = permutation_importance(
            &champion_model,
            &x_valid,
            &y_valid,
            config.pfi_repeats,
            seed::derive(config.seeds[0], &[seed::label("report-pfi")]),
        )?;
        let shapley_result = if rebuilt.feature_names.len() <= MAX_SHAPLEY_FEATURES {
            let pick = |pool: &[usize], want: usize, stream: &str| -> Vec<usize> {
                let mut order = pool.to_vec();
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
                    config.seeds[0],
                    &[seed::label(stream)],
                ));
                order.shuffle(&mut rng);
                order.truncate(want.max(1).min(pool.len()));
                order.sort_unstable();
                order
            };
            let explained = pick(&rebuilt.valid_idx, config.shapley_rows, "shapley-rows");
            let background =
                pick(&rebuilt.train_idx, config.shapley_background, "shapley-background");
            Some(shapley(
                &champion_model,
                &features.select_rows(&explained),
                &features.select_rows(&background),
            )?)
        } else {
            None
        };
        let mut notes = vec![format!(
            "PFI filter keeps features with importance >= {} of the maximum",
            config.pfi_filter_fraction
        )];
        if shapley_result.is_none() {
            notes.push(format!(
                "Shapley enumeration skipped: {} features exceed the exact bound of {}",
                rebuilt.feature_names.len(),
                MAX_SHAPLEY_FEATURES
            ));
        }
        Some(Attribution { pfi, shapley: shapley_result, notes })
    } else {
        None
    };

    let outliers = {
        let y_all = cut.target();
        detect_outliers(&champion_model, &features, &y_all, config.outlier_z)?
            .into_iter()
            .map(|(row, z)| OutlierRecord {
                row,
                group: groups[row].clone(),
                time: time[row],
                observed: y_all[row],
                predicted: champion_model.predict_row(features.row(row)),
                standardized_residual: z,
            })
            .collect()
    };

    let report = BenchmarkReport {
        format_version: 1,
        config: config.clone(),
        dataset: DatasetSummary {
            n_rows: table.n_rows(),
            feature_names: table.features().names().to_vec(),
            groups: table.distinct_groups(),
        },
        entries,
        champions,
        champion,
        verification,
        attribution,
        outliers,
        notes: vec![
            "champion selection minimizes validation RMSE; the by-R2 ordering is reported \
             alongside for comparison"
                .into(),
            "every metrics bundle is labeled with its partition (train_metrics / \
             valid_metrics); pooled k-fold metrics use out-of-fold predictions"
                .into(),
            format!("outlier criterion: |standardized residual| > {}", config.outlier_z),
        ],
    };

    Ok(BenchmarkOutcome { report, champion_model, champion_rows })
}

/// Prediction quality on one held-out device.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalTestResult {
    pub group: String,
    pub metrics: MetricsBundle,
    pub rows: Vec<PredictionRow>,
    /// Set when the model saw this group during training and the guard was
    /// explicitly disabled.
    pub leakage_warning: bool,
}

/// Evaluates a model on every row of one group, ordered by day. By default
/// the call refuses a group the model was trained on; `allow_leakage`
/// computes anyway and flags the result.
pub fn external_test(
    model: &TrainedModel,
    table: &DataTable,
    group: &str,
    allow_leakage: bool,
) -> Result<ExternalTestResult, PipelineError> {
    let groups = table.group_ids();
    if !groups.iter().any(|g| g == group) {
        return Err(PipelineError::Data(crate::data::DataError::GroupAbsent(
            group.to_string(),
        )));
    }
    let leakage = model.training_groups.contains(group);
    if leakage && !allow_leakage {
        return Err(PipelineError::LeakageGuard { group: group.to_string() });
    }

    let rows: Vec<usize> = (0..table.n_rows()).filter(|&i| groups[i] == group).collect();
    let features = table.features().select_columns(&model.feature_names)?;
    let target = table.target();
    let time = table
        .time_index()
        .map(|i| table.column_values(i))
        .unwrap_or_else(|| (0..table.n_rows()).map(|i| i as f64).collect());

    let mut records: Vec<PredictionRow> = rows
        .iter()
        .map(|&i| PredictionRow {
            group: group.to_string(),
            time: time[i],
            observed: target[i],
            predicted: model.predict_row(features.row(i)),
        })
        .collect();
    records.sort_by(|a, b| a.time.total_cmp(&b.time));
    let observed: Vec<f64> = records.iter().map(|r| r.observed).collect();
    let predicted: Vec<f64> = records.iter().map(|r| r.predicted).collect();
    let metrics = MetricsBundle::compute(&observed, &predicted)?;
    Ok(ExternalTestResult {
        group: group.to_string(),
        metrics,
        rows: records,
        leakage_warning: leakage,
    })
}
