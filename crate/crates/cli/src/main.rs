//! `degbench` — command-line front end wiring the toolkit into the full
//! curate → generate → predict → verify → explain → report workflow.
//!
//! Progress goes to standard error, one-line summaries to standard output,
//! machine artifacts to the output directory. Exit code 2 flags usage
//! errors (clap), 1 flags runtime failures (with an error JSON on stderr).

mod commands;

use clap::{ArgAction, Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "degbench",
    version,
    about = "Solar-cell efficiency degradation benchmarking: parametric fits, learner sweeps, verification and attribution"
)]
pub struct Cli {
    /// Master seed; falls back to DEGBENCH_SEED, then 0. Never wall-clock.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Cap on sweep parallelism (default: available hardware parallelism).
    /// Results are identical for every value.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone)]
pub struct CurationFlags {
    /// Feature pairs above this |Pearson r| are reduced to one column.
    #[arg(long, default_value_t = 0.9)]
    pub corr_threshold: f64,

    /// Keep exact duplicate rows instead of dropping them.
    #[arg(long, action = ArgAction::SetTrue)]
    pub no_dedup: bool,

    /// Divide the target by each group's initial value before modeling.
    #[arg(long, action = ArgAction::SetTrue)]
    pub normalize_target: bool,
}

#[derive(Args, Clone)]
pub struct SweepFlags {
    /// Benchmark configuration file (TOML); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Comma-separated learner families (MVL,RF,GB,NN).
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,

    /// Comma-separated training fractions in (0,1).
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,

    /// Comma-separated day cutoffs.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,

    /// Hyperparameter candidates evaluated per sweep cell.
    #[arg(long)]
    pub budget: Option<usize>,

    /// Feature-filter variants to run: both, on or off.
    #[arg(long, value_parser = ["both", "on", "off"])]
    pub pfi: Option<String>,
}

#[derive(Args, Clone)]
pub struct OutputFlags {
    /// Output directory.
    #[arg(long, default_value = "./degbench-out")]
    pub out: PathBuf,

    /// Overwrite a non-empty output directory.
    #[arg(long, action = ArgAction::SetTrue)]
    pub force: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Load a CSV against a schema, curate it and write the result.
    Curate {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        curation: CurationFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Fit a parametric decay shape; with windows, run the
    /// fit-and-forecast protocol.
    Lsfit {
        /// Shape name: exp1, exp2, gauss1, gauss2 or poly3.
        #[arg(long)]
        model: String,
        /// Series CSV: (day, value) or (cell, day, value) with a header.
        #[arg(long)]
        input: PathBuf,
        /// Fit-window day cutoffs, e.g. 30,60,90,120.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<f64>>,
        /// Forecast-horizon day cutoffs (default 60,90,120,150,180).
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        /// Random restarts per fit.
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Output JSON path (a .md sibling is written next to it).
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract J_sc, V_oc, P_mpp, FF and PCE from J-V sweep CSVs.
    ExtractJv {
        /// One two-column (voltage, current_density) CSV.
        #[arg(long, conflicts_with = "batch")]
        input: Option<PathBuf>,
        /// Directory of <cell>_<day>.csv sweeps.
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Incident irradiance in mW/cm².
        #[arg(long, default_value_t = 100.0)]
        irradiance: f64,
        /// Sign convention of the raw photocurrent.
        #[arg(long, value_parser = ["negative", "positive"], default_value = "negative")]
        sign: String,
        /// Output file (params JSON, or extracted table CSV in batch mode).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the benchmark sweep and write the sweep report (no
    /// verification/attribution passes).
    Generate {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        curation: CurationFlags,
        #[command(flatten)]
        sweep: SweepFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Apply a saved model to a dataset; optionally score one held-out
    /// group as an external test.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Score only this group, ordered by day.
        #[arg(long)]
        group: Option<String>,
        /// Evaluate a group the model was trained on (flagged as leakage).
        #[arg(long, action = ArgAction::SetTrue)]
        allow_leakage: bool,
        /// Outlier flagging threshold in residual standard deviations.
        #[arg(long, default_value_t = 2.0)]
        outlier_z: f64,
        #[command(flatten)]
        curation: CurationFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Run the verification battery (y-mean, y-shuffle, onehot, k-fold)
    /// for a saved model's spec.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Training fraction of the verification split.
        #[arg(long, default_value_t = 0.9)]
        fraction: f64,
        /// Cross-validation fold count.
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        curation: CurationFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Permutation importance and exact Shapley attribution for a saved
    /// model.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Rows to attribute (seeded sample).
        #[arg(long, default_value_t = 50)]
        rows: usize,
        /// Background rows for the value function (seeded sample).
        #[arg(long, default_value_t = 32)]
        background: usize,
        /// Permutation repeats for PFI.
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[command(flatten)]
        curation: CurationFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Generate the synthetic measurement dataset.
    Synth {
        #[arg(long, default_value_t = 5)]
        cells: usize,
        #[arg(long, default_value_t = 33)]
        rows_per_cell: usize,
        #[arg(long, default_value_t = 3e-4)]
        noise_sd: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the matching schema file here.
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// Re-render report.md from an existing report.json.
    Report {
        /// Directory containing report.json.
        #[arg(long)]
        from: PathBuf,
    },
    /// Full workflow: curate, sweep, verify, explain, report.
    Full {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        curation: CurationFlags,
        #[command(flatten)]
        sweep: SweepFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
}

fn error_json(err: &anyhow::Error) -> String {
    let chain: Vec<String> = err.chain().map(|c| c.to_string()).collect();
    serde_json::json!({ "error": chain[0], "chain": chain }).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("{}", error_json(&anyhow::Error::new(err)));
            return ExitCode::from(1);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(1)
        }
    }
}
