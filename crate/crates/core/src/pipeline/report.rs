//! Serialization of the benchmark outcome into the report artifacts:
//! canonical JSON, markdown tables, CSV pairs and SVG plots.

use super::benchmark::{BenchmarkOutcome, BenchmarkReport};
use super::svg::{bar_chart_svg, scatter_svg};
use super::PipelineError;
use std::path::Path;

fn fmt_r2(r2: Option<f64>) -> String {
    match r2 {
        Some(v) => format!("{v:.2}"),
        None => "-".into(),
    }
}

/// Markdown mirror of the report: per-cutoff accuracy tables with the
/// champion row in bold, then verification, attribution and outliers.
pub fn render_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    out.push_str("# Degradation benchmark report\n\n");
    out.push_str(&format!(
        "Dataset: {} rows, {} predictor columns, groups: {}\n\n",
        report.dataset.n_rows,
        report.dataset.feature_names.len(),
        report.dataset.groups.join(", ")
    ));

    for champs in &report.champions {
        out.push_str(&format!(
            "## Accuracy metrics with training data up to {} days\n\n",
            champs.cutoff
        ));
        out.push_str("| ML model | R² | RMSE | SSE | MAE |\n|---:|---:|---:|---:|---:|\n");
        for (i, entry) in report.entries.iter().enumerate() {
            if entry.cutoff != champs.cutoff {
                continue;
            }
            match (&entry.status[..], &entry.valid_metrics) {
                ("ok", Some(m)) => {
                    let label = if i == champs.by_rmse {
                        format!("**{}**", entry.label())
                    } else {
                        entry.label()
                    };
                    out.push_str(&format!(
                        "| {label} | {} | {:.4} | {:.4} | {:.4} |\n",
                        fmt_r2(m.r2),
                        m.rmse,
                        m.sse,
                        m.mae
                    ));
                }
                _ => {
                    out.push_str(&format!(
                        "| {} | failed | - | - | - |\n",
                        entry.label()
                    ));
                }
            }
        }
        let rmse_label = report.entries[champs.by_rmse].label();
        let r2_label = report.entries[champs.by_r2].label();
        out.push_str(&format!(
            "\nChampion by validation RMSE: **{rmse_label}**; best by R²: {r2_label}\n\n"
        ));
    }

    out.push_str("## Champion\n\n");
    out.push_str(&format!(
        "`{}` at cutoff {} days — spec `{}`, features: {}\n\n",
        report.champion.label,
        report.champion.cutoff,
        report.champion.spec.describe(),
        report.champion.feature_names.join(", ")
    ));
    let m = &report.champion.valid_metrics;
    out.push_str(&format!(
        "Validation metrics: R² = {}, RMSE = {:.4}, SSE = {:.4}, MAE = {:.4} (n = {})\n\n",
        fmt_r2(m.r2),
        m.rmse,
        m.sse,
        m.mae,
        m.n
    ));

    if let Some(v) = &report.verification {
        out.push_str("## Verification\n\n");
        out.push_str("| test | RMSE |\n|---:|---:|\n");
        out.push_str(&format!("| model | {:.4} |\n", v.model_rmse));
        out.push_str(&format!("| y-mean | {:.4} |\n", v.ymean_rmse));
        out.push_str(&format!("| y-shuffle | {:.4} |\n", v.yshuffle_rmse));
        out.push_str(&format!("| onehot | {:.4} |\n", v.onehot_rmse));
        let p = &v.kfold.pooled;
        out.push_str(&format!(
            "\n{}-fold cross-validation (pooled): R² = {}, RMSE = {:.4}, MAE = {:.4}\n\n",
            v.kfold.folds.len(),
            fmt_r2(p.r2),
            p.rmse,
            p.mae
        ));
        for note in &v.notes {
            out.push_str(&format!("- {note}\n"));
        }
        out.push('\n');
    }

    if let Some(attribution) = &report.attribution {
        out.push_str("## Feature attribution\n\n");
        out.push_str("| feature | PFI (ΔRMSE) |");
        let shap_means = attribution.shapley.as_ref().map(|s| s.mean_abs_attribution());
        if shap_means.is_some() {
            out.push_str(" mean |SHAP| |");
        }
        out.push('\n');
        out.push_str("|---:|---:|");
        if shap_means.is_some() {
            out.push_str("---:|");
        }
        out.push('\n');
        for (i, name) in attribution.pfi.feature_names.iter().enumerate() {
            out.push_str(&format!("| {name} | {:.5} |", attribution.pfi.importances[i]));
            if let Some(means) = &shap_means {
                out.push_str(&format!(" {:.5} |", means[i]));
            }
            out.push('\n');
        }
        out.push('\n');
        for note in &attribution.notes {
            out.push_str(&format!("- {note}\n"));
        }
        out.push('\n');
    }

    out.push_str("## Outliers\n\n");
    if report.outliers.is_empty() {
        out.push_str("none flagged\n\n");
    } else {
        out.push_str("| row | group | day | observed | predicted | z |\n");
        out.push_str("|---:|---:|---:|---:|---:|---:|\n");
        for o in &report.outliers {
            out.push_str(&format!(
                "| {} | {} | {} | {:.4} | {:.4} | {:+.2} |\n",
                o.row, o.group, o.time, o.observed, o.predicted, o.standardized_residual
            ));
        }
        out.push('\n');
    }

    out.push_str("## Notes\n\n");
    for note in &report.notes {
        out.push_str(&format!("- {note}\n"));
    }
    out
}

fn write(path: &Path, content: &str) -> Result<(), PipelineError> {
    std::fs::write(path, content).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes report.json, report.md, predicted_vs_observed.csv,
/// champion_model.json and the SVG plots into `dir`.
pub fn write_artifacts(dir: &Path, outcome: &BenchmarkOutcome) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let report = &outcome.report;
    write(
        &dir.join("report.json"),
        &serde_json::to_string_pretty(report).expect("report serializes"),
    )?;
    write(&dir.join("report.md"), &render_markdown(report))?;

    let mut csv = String::from("group,time_days,observed,predicted\n");
    for row in &outcome.champion_rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.group, row.time, row.observed, row.predicted
        ));
    }
    write(&dir.join("predicted_vs_observed.csv"), &csv)?;

    write(
        &dir.join("champion_model.json"),
        &outcome.champion_model.to_json_string(),
    )?;

    let observed: Vec<f64> = outcome.champion_rows.iter().map(|r| r.observed).collect();
    let predicted: Vec<f64> = outcome.champion_rows.iter().map(|r| r.predicted).collect();
    write(
        &dir.join("predicted_vs_observed.svg"),
        &scatter_svg(
            &format!("{} validation: observed vs predicted", report.champion.label),
            &observed,
            &predicted,
        ),
    )?;

    if let Some(v) = &report.verification {
        write(
            &dir.join("verification.svg"),
            &bar_chart_svg(
                "verification RMSE",
                &["model".into(), "y-mean".into(), "y-shuffle".into(), "onehot".into()],
                &[v.model_rmse, v.ymean_rmse, v.yshuffle_rmse, v.onehot_rmse],
            ),
        )?;
    }
    if let Some(a) = &report.attribution {
        write(
            &dir.join("pfi.svg"),
            &bar_chart_svg(
                "permutation feature importance (ΔRMSE)",
                &a.pfi.feature_names,
                &a.pfi.importances,
            ),
        )?;
        if let Some(s) = &a.shapley {
            write(
                &dir.join("shap.svg"),
                &bar_chart_svg(
                    "mean |Shapley attribution|",
                    &s.feature_names,
                    &s.mean_abs_attribution(),
                ),
            )?;
        }
    }
    Ok(())
}
