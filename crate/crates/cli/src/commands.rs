//! Subcommand implementations.

use crate::{Cli, Command, CurationFlags, OutputFlags, SweepFlags};
use anyhow::{bail, Context, Result};
use degbench_core::curvefit::{self, CurveKind, DeviceSeries, FitOptions};
use degbench_core::data::{
    curate, load_csv, normalize_target, CurateOptions, CurationLog, DataTable, Schema,
    SplitConfig,
};
use degbench_core::jv::{self, SignConvention};
use degbench_core::learners::{permutation_importance, TrainedModel};
use degbench_core::pipeline::{
    self, bar_chart_svg, external_test, run_benchmark, synth_dataset, BenchmarkConfig,
    SynthConfig,
};
use degbench_core::seed;
use std::path::{Path, PathBuf};

pub fn run(cli: Cli) -> Result<()> {
    let master_seed = resolve_seed(cli.seed);
    match cli.command {
        Command::Curate { csv, schema, curation, output } => {
            cmd_curate(&csv, &schema, &curation, &output)
        }
        Command::Lsfit { model, input, windows, horizons, restarts, out } => {
            cmd_lsfit(&model, &input, windows, horizons, restarts, &out, master_seed)
        }
        Command::ExtractJv { input, batch, irradiance, sign, out } => {
            cmd_extract_jv(input, batch, irradiance, &sign, out)
        }
        Command::Generate { csv, schema, curation, sweep, output } => {
            cmd_benchmark(&csv, &schema, &curation, &sweep, &output, master_seed, false)
        }
        Command::Predict {
            model,
            csv,
            schema,
            group,
            allow_leakage,
            outlier_z,
            curation,
            output,
        } => cmd_predict(&model, &csv, &schema, group, allow_leakage, outlier_z, &curation, &output),
        Command::Verify { model, csv, schema, fraction, k, curation, output } => {
            cmd_verify(&model, &csv, &schema, fraction, k, &curation, &output, master_seed)
        }
        Command::Explain { model, csv, schema, rows, background, repeats, curation, output } => {
            cmd_explain(&model, &csv, &schema, rows, background, repeats, &curation, &output, master_seed)
        }
        Command::Synth { cells, rows_per_cell, noise_sd, out, schema_out } => {
            cmd_synth(cells, rows_per_cell, noise_sd, &out, schema_out, master_seed)
        }
        Command::Report { from } => cmd_report(&from),
        Command::Full { csv, schema, curation, sweep, output } => {
            cmd_benchmark(&csv, &schema, &curation, &sweep, &output, master_seed, true)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("DEGBENCH_SEED").ok().and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

/// Creates the output directory, refusing to reuse a non-empty one without
/// --force.
fn prepare_out_dir(output: &OutputFlags) -> Result<PathBuf> {
    let dir = &output.out;
    if dir.exists() {
        let occupied = std::fs::read_dir(dir)
            .with_context(|| format!("cannot inspect {}", dir.display()))?
            .next()
            .is_some();
        if occupied && !output.force {
            bail!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            );
        }
    } else {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(dir.clone())
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

fn load_curated(
    csv: &Path,
    schema: &Path,
    flags: &CurationFlags,
) -> Result<(DataTable, CurationLog)> {
    let schema = Schema::from_path(schema)?;
    let raw = load_csv(csv, &schema)?;
    eprintln!("loaded {} rows x {} columns from {}", raw.n_rows(), raw.n_cols(), csv.display());
    let table = if flags.normalize_target { normalize_target(&raw)? } else { raw };
    let opts = CurateOptions { corr_threshold: flags.corr_threshold, dedup: !flags.no_dedup };
    let (curated, log) = curate(&table, &opts)?;
    eprintln!(
        "curated: {} rows x {} columns ({} log entries)",
        curated.n_rows(),
        curated.n_cols(),
        log.entries.len()
    );
    Ok((curated, log))
}

fn cmd_curate(
    csv: &Path,
    schema: &Path,
    flags: &CurationFlags,
    output: &OutputFlags,
) -> Result<()> {
    let dir = prepare_out_dir(output)?;
    let (table, log) = load_curated(csv, schema, flags)?;
    table.write_csv(&dir.join("curated.csv"))?;
    write_text(&dir.join("curation_log.json"), &log.to_json())?;
    write_text(
        &dir.join("schema.curated.toml"),
        &Schema { columns: table.columns().to_vec() }.to_toml_string(),
    )?;
    println!(
        "curated {} rows x {} columns -> {}",
        table.n_rows(),
        table.n_cols(),
        dir.display()
    );
    Ok(())
}

/// Series CSV: (day, value) with a header, or (cell, day, value).
fn load_series(path: &Path) -> Result<Vec<DeviceSeries>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("series file is empty")?;
    let width = header.split(',').count();
    if width != 2 && width != 3 {
        bail!("series file must have 2 (day,value) or 3 (cell,day,value) columns");
    }
    let mut series: Vec<DeviceSeries> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != width {
            bail!("line {}: expected {} cells, got {}", i + 2, width, cells.len());
        }
        let (device, day_text, value_text) = if width == 2 {
            ("series", cells[0], cells[1])
        } else {
            (cells[0], cells[1], cells[2])
        };
        let day: f64 = day_text.parse().with_context(|| format!("line {}: bad day", i + 2))?;
        let value: f64 =
            value_text.parse().with_context(|| format!("line {}: bad value", i + 2))?;
        match series.iter_mut().find(|s| s.device == device) {
            Some(s) => {
                s.x.push(day);
                s.y.push(value);
            }
            None => series.push(DeviceSeries {
                device: device.to_string(),
                x: vec![day],
                y: vec![value],
            }),
        }
    }
    if series.is_empty() {
        bail!("series file has no data rows");
    }
    Ok(series)
}

fn cmd_lsfit(
    model: &str,
    input: &Path,
    windows: Option<Vec<f64>>,
    horizons: Option<Vec<f64>>,
    restarts: usize,
    out: &Path,
    master_seed: u64,
) -> Result<()> {
    let kind: CurveKind = model.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let series = load_series(input)?;
    let opts = FitOptions {
        n_restarts: restarts.max(1),
        seed: seed::derive(master_seed, &[seed::label("lsfit")]),
        ..Default::default()
    };
    match windows {
        Some(windows) if !windows.is_empty() => {
            let horizons =
                horizons.unwrap_or_else(|| vec![60.0, 90.0, 120.0, 150.0, 180.0]);
            let table = curvefit::forecast_experiment(kind, &series, &windows, &horizons, &opts)?;
            write_json(out, &table)?;
            write_text(&out.with_extension("md"), &table.to_markdown())?;
            let best = table
                .cells
                .iter()
                .min_by(|a, b| a.metrics.rmse.total_cmp(&b.metrics.rmse))
                .expect("non-empty forecast table");
            println!(
                "{} forecast over {} windows: best RMSE {:.4} at window {} -> horizon {}",
                kind, windows.len(), best.metrics.rmse, best.window, best.horizon
            );
        }
        _ => {
            let mut fits = Vec::new();
            for s in &series {
                let fit = curvefit::fit(kind, &s.x, &s.y, None, &opts)?;
                println!(
                    "{} fit on {}: SSE {:.6}, RMSE {:.6}, converged {}",
                    kind, s.device, fit.metrics.sse, fit.metrics.rmse, fit.converged
                );
                fits.push((s.device.clone(), fit));
            }
            write_json(out, &fits)?;
        }
    }
    Ok(())
}

fn cmd_extract_jv(
    input: Option<PathBuf>,
    batch: Option<PathBuf>,
    irradiance: f64,
    sign: &str,
    out: Option<PathBuf>,
) -> Result<()> {
    let convention = match sign {
        "positive" => SignConvention::PhotocurrentPositive,
        _ => SignConvention::PhotocurrentNegative,
    };
    match (input, batch) {
        (Some(file), None) => {
            let curve = jv::load_jv_csv(&file, irradiance)?;
            let params = jv::extract_params(&curve, convention)?;
            println!(
                "jsc={:.4} mA/cm2  voc={:.4} V  pmpp={:.4} mW/cm2  ff={:.4}  pce={:.4}%",
                params.jsc,
                params.voc,
                params.pmpp,
                params.ff,
                params.pce * 100.0
            );
            if let Some(out) = out {
                write_json(&out, &params)?;
            }
        }
        (None, Some(dir)) => {
            let records = jv::batch_extract(&dir, irradiance, convention)?;
            let out = out.context("--out is required in batch mode")?;
            let mut csv = String::from("cell,day,jsc,voc,pmpp,ff,pce\n");
            for r in &records {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.cell, r.day, r.params.jsc, r.params.voc, r.params.pmpp, r.params.ff,
                    r.params.pce
                ));
            }
            write_text(&out, &csv)?;
            println!("extracted {} sweeps -> {}", records.len(), out.display());
        }
        _ => bail!("exactly one of --input or --batch is required"),
    }
    Ok(())
}

fn build_config(sweep: &SweepFlags, verification: bool) -> Result<BenchmarkConfig> {
    let mut config = match &sweep.config {
        Some(path) => BenchmarkConfig::from_path(path)?,
        None => BenchmarkConfig::default(),
    };
    if let Some(families) = &sweep.families {
        config.families = families.clone();
    }
    if let Some(fractions) = &sweep.fractions {
        config.train_fractions = fractions.clone();
    }
    if let Some(cutoffs) = &sweep.cutoffs {
        config.time_cutoffs = cutoffs.clone();
    }
    if let Some(budget) = sweep.budget {
        config.search_budget = budget;
    }
    match sweep.pfi.as_deref() {
        Some("on") => config.pfi_variants = vec![true],
        Some("off") => config.pfi_variants = vec![false],
        _ => {}
    }
    config.include_verification = verification;
    config.include_attribution = verification;
    config.validate()?;
    Ok(config)
}

fn cmd_benchmark(
    csv: &Path,
    schema: &Path,
    curation: &CurationFlags,
    sweep: &SweepFlags,
    output: &OutputFlags,
    master_seed: u64,
    full: bool,
) -> Result<()> {
    let dir = prepare_out_dir(output)?;
    let (table, log) = load_curated(csv, schema, curation)?;
    let mut config = build_config(sweep, full)?;
    config.seeds = config.seeds.iter().map(|s| seed::derive(master_seed, &[*s])).collect();

    eprintln!(
        "sweep: {} cutoffs x {} families x {} fractions x {} variants x {} seeds, budget {}",
        config.time_cutoffs.len(),
        config.families.len(),
        config.train_fractions.len(),
        config.pfi_variants.len(),
        config.seeds.len(),
        config.search_budget
    );
    let outcome = run_benchmark(&table, &config)?;

    table.write_csv(&dir.join("curated.csv"))?;
    write_text(&dir.join("curation_log.json"), &log.to_json())?;
    pipeline::write_artifacts(&dir, &outcome)?;

    let champion = &outcome.report.champion;
    let m = &champion.valid_metrics;
    println!(
        "champion {} at cutoff {} days: R2={} RMSE={:.4} MAE={:.4} -> {}",
        champion.label,
        champion.cutoff,
        m.r2.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
        m.rmse,
        m.mae,
        dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    model_path: &Path,
    csv: &Path,
    schema: &Path,
    group: Option<String>,
    allow_leakage: bool,
    outlier_z: f64,
    curation: &CurationFlags,
    output: &OutputFlags,
) -> Result<()> {
    let dir = prepare_out_dir(output)?;
    let model = TrainedModel::load(model_path)?;
    let (table, _) = load_curated(csv, schema, curation)?;

    match group {
        Some(group) => {
            let result = external_test(&model, &table, &group, allow_leakage)?;
            let mut csv_text = String::from("group,time_days,observed,predicted\n");
            for row in &result.rows {
                csv_text.push_str(&format!(
                    "{},{},{},{}\n",
                    row.group, row.time, row.observed, row.predicted
                ));
            }
            write_text(&dir.join("predictions.csv"), &csv_text)?;
            write_json(&dir.join("external_test.json"), &result)?;
            let m = &result.metrics;
            println!(
                "external test on {group}: R2={} RMSE={:.4} MAE={:.4} ({} rows{})",
                m.r2.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                m.rmse,
                m.mae,
                m.n,
                if result.leakage_warning { ", LEAKAGE WARNING" } else { "" }
            );
        }
        None => {
            let features = table.features().select_columns(&model.feature_names)?;
            let predictions = model.predict(&features)?;
            let target = table.target();
            let groups = table.group_ids();
            let time = table
                .time_index()
                .map(|i| table.column_values(i))
                .unwrap_or_else(|| (0..table.n_rows()).map(|i| i as f64).collect());
            let mut csv_text = String::from("group,time_days,observed,predicted\n");
            for i in 0..table.n_rows() {
                csv_text.push_str(&format!(
                    "{},{},{},{}\n",
                    groups[i], time[i], target[i], predictions[i]
                ));
            }
            write_text(&dir.join("predictions.csv"), &csv_text)?;
            let metrics = degbench_core::metrics::MetricsBundle::compute(&target, &predictions)?;
            write_json(&dir.join("metrics.json"), &metrics)?;
            let outliers = pipeline::detect_outliers(&model, &features, &target, outlier_z)?;
            write_json(&dir.join("outliers.json"), &outliers)?;
            println!(
                "predicted {} rows: R2={} RMSE={:.4}, {} outliers (|z| > {outlier_z}) -> {}",
                table.n_rows(),
                metrics.r2.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                metrics.rmse,
                outliers.len(),
                dir.display()
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    model_path: &Path,
    csv: &Path,
    schema: &Path,
    fraction: f64,
    k: usize,
    curation: &CurationFlags,
    output: &OutputFlags,
    master_seed: u64,
) -> Result<()> {
    let dir = prepare_out_dir(output)?;
    let model = TrainedModel::load(model_path)?;
    let (table, _) = load_curated(csv, schema, curation)?;
    let split_cfg =
        SplitConfig::random(fraction, seed::derive(master_seed, &[seed::label("verify")]));
    let result = pipeline::verify(&model.spec, &table, &split_cfg, k, Some(&model.feature_names))?;
    write_json(&dir.join("verification.json"), &result)?;
    write_text(
        &dir.join("verification.svg"),
        &bar_chart_svg(
            "verification RMSE",
            &["model".into(), "y-mean".into(), "y-shuffle".into(), "onehot".into()],
            &[result.model_rmse, result.ymean_rmse, result.yshuffle_rmse, result.onehot_rmse],
        ),
    )?;
    let pooled = &result.kfold.pooled;
    println!(
        "verify: model={:.4} y-mean={:.4} y-shuffle={:.4} onehot={:.4}; {}-fold pooled R2={}",
        result.model_rmse,
        result.ymean_rmse,
        result.yshuffle_rmse,
        result.onehot_rmse,
        k,
        pooled.r2.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_explain(
    model_path: &Path,
    csv: &Path,
    schema: &Path,
    rows: usize,
    background: usize,
    repeats: usize,
    curation: &CurationFlags,
    output: &OutputFlags,
    master_seed: u64,
) -> Result<()> {
    let dir = prepare_out_dir(output)?;
    let model = TrainedModel::load(model_path)?;
    let (table, _) = load_curated(csv, schema, curation)?;
    let features = table.features().select_columns(&model.feature_names)?;
    let target = table.target();

    let pfi = permutation_importance(
        &model,
        &features,
        &target,
        repeats,
        seed::derive(master_seed, &[seed::label("explain-pfi")]),
    )?;
    write_json(&dir.join("pfi.json"), &pfi)?;
    write_text(
        &dir.join("pfi.svg"),
        &bar_chart_svg("permutation feature importance (ΔRMSE)", &pfi.feature_names, &pfi.importances),
    )?;

    let mut summary = format!(
        "top PFI feature: {}",
        pfi.feature_names[pfi.top_feature()]
    );
    if model.feature_names.len() <= pipeline::MAX_SHAPLEY_FEATURES {
        let n = features.n_rows();
        let take = |count: usize, stream: &str| -> Vec<usize> {
            let mut order: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed::derive(
                master_seed,
                &[seed::label(stream)],
            ));
            order.shuffle(&mut rng);
            order.truncate(count.max(1).min(n));
            order.sort_unstable();
            order
        };
        let explained = features.select_rows(&take(rows, "explain-rows"));
        let bg = features.select_rows(&take(background, "explain-background"));
        let shap = pipeline::shapley(&model, &explained, &bg)?;
        write_json(&dir.join("shapley.json"), &shap)?;
        let means = shap.mean_abs_attribution();
        write_text(
            &dir.join("shap.svg"),
            &bar_chart_svg("mean |Shapley attribution|", &shap.feature_names, &means),
        )?;
        let top = means
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| shap.feature_names[i].clone())
            .unwrap_or_default();
        summary.push_str(&format!("; top |SHAP| feature: {top}"));
    } else {
        summary.push_str("; Shapley skipped (feature count exceeds exact bound)");
    }
    println!("{summary} -> {}", dir.display());
    Ok(())
}

fn cmd_synth(
    cells: usize,
    rows_per_cell: usize,
    noise_sd: f64,
    out: &Path,
    schema_out: Option<PathBuf>,
    master_seed: u64,
) -> Result<()> {
    let config = SynthConfig {
        n_cells: cells,
        days: pipeline::default_schedule(rows_per_cell),
        decay: None,
        noise_sd,
        seed: master_seed,
    };
    let table = synth_dataset(&config);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    table.write_csv(out)?;
    if let Some(schema_path) = schema_out {
        let schema = Schema { columns: table.columns().to_vec() };
        write_text(&schema_path, &schema.to_toml_string())?;
    }
    println!(
        "synthesized {} rows over {} cells (seed {master_seed}) -> {}",
        table.n_rows(),
        cells,
        out.display()
    );
    Ok(())
}

fn cmd_report(from: &Path) -> Result<()> {
    let text = std::fs::read_to_string(from.join("report.json"))
        .with_context(|| format!("cannot read {}", from.join("report.json").display()))?;
    let report: pipeline::BenchmarkReport = serde_json::from_str(&text)?;
    let rendered = pipeline::render_markdown(&report);
    write_text(&from.join("report.md"), &rendered)?;
    println!(
        "rendered report.md for champion {} -> {}",
        report.champion.label,
        from.display()
    );
    Ok(())
}
