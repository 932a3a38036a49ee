use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use shelter_sam::commands::{self, CommandError, RunConfig};
use shelter_sam::ingest::{parse_iso_date, Diagnostic, IngestMode};
use shelter_sam::{ClusterConfig, Era, EraConfig, SamConfig};

/// Shelter access metrics, typology comparison and quarterly timelines.
#[derive(Debug, Parser)]
#[command(name = "sam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-client duration, in-shelter percentage, active flag (and label).
    Metrics {
        input: PathBuf,
        /// Evaluate every client at this date instead of at their horizon.
        #[arg(long, value_parser = date)]
        as_of: Option<NaiveDate>,
    },
    /// SAM vs K-means agreement, alpha sweep and group statistics for an era cohort.
    Compare { input: PathBuf },
    /// Quarterly percent-change and occupancy-share tables.
    Timeline { input: PathBuf },
    /// Synthetic records and ground truth from a scenario file.
    Generate { scenario: PathBuf },
}

fn date(s: &str) -> Result<NaiveDate, String> {
    parse_iso_date(s)
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// In-shelter percentage above which active clients are chronic.
    #[arg(long, global = true, default_value_t = 85.0)]
    alpha: f64,
    /// Days since last stay below which a client is active.
    #[arg(long, global = true, default_value_t = 30)]
    active_threshold: u32,
    /// Days after first stay at which clients are labeled.
    #[arg(long, global = true, default_value_t = 90)]
    horizon: u32,
    /// Clustering seed; for `generate`, overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 3)]
    k: usize,
    #[arg(long, global = true, default_value_t = 50)]
    restarts: u32,
    /// Cluster on raw stays/episodes instead of z-scores.
    #[arg(long, global = true)]
    no_standardize: bool,
    /// Cohort for `compare`: housing-ready, housing-first or covid19.
    #[arg(long, global = true, default_value = "housing-ready")]
    era: Era,
    #[arg(long, global = true, value_parser = date, default_value = "2017-08-01")]
    housing_ready_end: NaiveDate,
    #[arg(long, global = true, value_parser = date, default_value = "2020-03-01")]
    housing_first_end: NaiveDate,
    /// First quarter of the timeline.
    #[arg(long, global = true, value_parser = date, default_value = "2013-07-01")]
    origin: NaiveDate,
    /// Exclusive timeline end.
    #[arg(long, global = true, value_parser = date)]
    end: Option<NaiveDate>,
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// Leave the label column out of `metrics`.
    #[arg(long, global = true)]
    no_labels: bool,
    /// Abort on the first malformed input row.
    #[arg(long, global = true)]
    strict: bool,
}

impl GlobalArgs {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            sam: SamConfig {
                active_threshold_days: self.active_threshold,
                evaluation_horizon_days: self.horizon,
                alpha_percent: self.alpha,
            },
            cluster: ClusterConfig {
                k: self.k,
                seed: self.seed.unwrap_or(0),
                restarts: self.restarts,
                standardize: !self.no_standardize,
                ..ClusterConfig::default()
            },
            eras: EraConfig {
                housing_ready_end: self.housing_ready_end,
                housing_first_end: self.housing_first_end,
            },
            era: self.era,
            timeline_origin: self.origin,
            timeline_end: self.end,
            output_dir: self.output_dir.clone(),
            ingest_mode: if self.strict { IngestMode::Strict } else { IngestMode::Lenient },
            no_labels: self.no_labels,
        }
    }
}

fn report_diagnostics(input: &Path, diagnostics: &[Diagnostic]) {
    for d in diagnostics.iter().take(20) {
        eprintln!("warning: {}: {d}", input.display());
    }
    if diagnostics.len() > 20 {
        eprintln!("warning: {} more malformed rows skipped", diagnostics.len() - 20);
    }
}

fn run(cli: Cli) -> Result<(), CommandError> {
    let config = cli.global.run_config();
    let out = config.output_dir.display();
    match &cli.command {
        Command::Metrics { input, as_of } => {
            let o = commands::run_metrics(input, &config, *as_of)?;
            report_diagnostics(input, &o.diagnostics);
            eprintln!("metrics: {} clients -> {out}/{}", o.rows, commands::METRICS_CSV);
        }
        Command::Compare { input } => {
            let r = commands::run_compare(input, &config)?;
            report_diagnostics(input, &r.diagnostics);
            eprintln!(
                "compare: {} clients in {} cohort, accuracy {:.2}% at alpha {}, best {:.2}% at alpha {} -> {out}",
                r.cohort_size,
                r.era,
                100.0 * r.accuracy,
                r.alpha_percent,
                100.0 * r.sweep.best.accuracy,
                r.sweep.best.alpha_percent,
            );
        }
        Command::Timeline { input } => {
            let o = commands::run_timeline(input, &config)?;
            report_diagnostics(input, &o.diagnostics);
            eprintln!("timeline: {} quarters from {} to {} -> {out}", o.bins, o.origin, o.end);
        }
        Command::Generate { scenario } => {
            let o = commands::run_generate(scenario, &config, cli.global.seed)?;
            eprintln!("generate: {} clients, {} records (seed {}) -> {out}", o.clients, o.records, o.seed);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
