//! File-based pipelines behind the `sam` binary.
//!
//! Every command reads its inputs, writes its tables into the output
//! directory, and finishes with a `manifest.json` recording the effective
//! configuration, an input digest and the files produced. Nothing in the
//! outputs depends on wall-clock time, so reruns are byte-identical.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cluster::{fit_kmeans, map_clusters_to_labels, ClusterConfig, ClusterError, ClusterSummary, FeatureRow};
use crate::episodes::{episode_features, DEFAULT_GAP_DAYS};
use crate::evaluation::{
    accuracy, agreement_by_label, default_alpha_grid, group_stats, sweep_alpha, AlphaSweep, EvalError, GroupStats,
    LabelAgreement, LabelSource, LabeledCohort,
};
use crate::ingest::{
    build_timelines, parse_records, select_era_cohort, write_records, ClientTimeline, Diagnostic, Era, EraConfig,
    IngestError, IngestMode, IngestSummary,
};
use crate::label::{AccessLabel, PerLabel};
use crate::sam::{classify, compute_sam_metrics, evaluate_client, SamConfig, SamError};
use crate::synth::{generate_population, truth_counts, write_truth_csv, ScenarioFile, SynthError};
use crate::timeline::{
    default_origin, next_quarter, occupancy_share, write_counts_csv, write_occupancy_csv, write_percent_change_csv,
    TimelineError,
};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("input file {0} does not exist")]
    InputNotFound(PathBuf),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Sam(#[from] SamError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Effective configuration shared by all commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub sam: SamConfig,
    pub cluster: ClusterConfig,
    pub eras: EraConfig,
    /// Cohort used by `compare`.
    pub era: Era,
    pub timeline_origin: NaiveDate,
    /// Exclusive end of the timeline; defaults to the quarter after the
    /// latest first stay.
    pub timeline_end: Option<NaiveDate>,
    pub output_dir: PathBuf,
    pub ingest_mode: IngestMode,
    /// Omit the label column from `metrics` output.
    pub no_labels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sam: SamConfig::default(),
            cluster: ClusterConfig::default(),
            eras: EraConfig::default(),
            era: Era::HousingReady,
            timeline_origin: default_origin(),
            timeline_end: None,
            output_dir: PathBuf::from("out"),
            ingest_mode: IngestMode::Lenient,
            no_labels: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CommandError> {
        self.sam.validate()?;
        self.cluster.validate()?;
        self.eras.validate()?;
        if let Some(end) = self.timeline_end {
            if self.timeline_origin >= end {
                return Err(CommandError::Config(format!(
                    "timeline origin {} must precede end {end}",
                    self.timeline_origin
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, E: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: Option<InputDigest>,
    config: &'a RunConfig,
    ingest: Option<IngestSummary>,
    details: E,
    outputs: Vec<String>,
}

/// Loaded input: timelines plus ingest bookkeeping.
#[derive(Debug)]
pub struct Loaded {
    pub timelines: Vec<ClientTimeline>,
    pub summary: IngestSummary,
    pub diagnostics: Vec<Diagnostic>,
    digest: InputDigest,
}

/// Reads and ingests a records CSV.
pub fn load_input(path: &Path, mode: IngestMode) -> Result<Loaded, CommandError> {
    if !path.is_file() {
        return Err(CommandError::InputNotFound(path.to_owned()));
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    };
    let parsed = parse_records(bytes.as_slice(), mode)?;
    let timelines = build_timelines(&parsed.records);
    let summary = IngestSummary::new(&parsed, &timelines);
    Ok(Loaded {
        timelines,
        summary,
        diagnostics: parsed.diagnostics,
        digest,
    })
}

fn prepare_output_dir(dir: &Path) -> Result<(), CommandError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CommandError> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(io_err(&path))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CommandError> {
    let path = dir.join(name);
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(&path))
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>, CommandError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(dir, name)?))
}

fn write_manifest<E: Serialize>(
    config: &RunConfig,
    command: &'static str,
    input: Option<InputDigest>,
    ingest: Option<IngestSummary>,
    details: E,
    outputs: &[&str],
) -> Result<(), CommandError> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        input,
        config,
        ingest,
        details,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&config.output_dir, MANIFEST, &manifest)
}

pub const MANIFEST: &str = "manifest.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const COMPARE_REPORT: &str = "compare_report.json";
pub const GROUP_STATS_CSV: &str = "group_stats.csv";
pub const ALPHA_SWEEP_CSV: &str = "alpha_sweep.csv";
pub const CLUSTER_MODEL_JSON: &str = "cluster_model.json";
pub const PERCENT_CHANGE_CSV: &str = "percent_change.csv";
pub const OCCUPANCY_SHARE_CSV: &str = "occupancy_share.csv";
pub const QUARTERLY_COUNTS_CSV: &str = "quarterly_counts.csv";
pub const RECORDS_CSV: &str = "records.csv";
pub const TRUTH_CSV: &str = "truth.csv";

#[derive(Debug, Clone, Serialize)]
pub struct MetricsOutcome {
    pub ingest: IngestSummary,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
    pub rows: usize,
    /// Fixed as-of date, if one was given instead of the evaluation horizon.
    pub as_of: Option<NaiveDate>,
}

/// Per-client metrics table. Clients are evaluated at their horizon, or at
/// `as_of` when given (clients first seen after `as_of` are left out).
pub fn run_metrics(input: &Path, config: &RunConfig, as_of: Option<NaiveDate>) -> Result<MetricsOutcome, CommandError> {
    config.validate()?;
    let loaded = load_input(input, config.ingest_mode)?;
    let dir = &config.output_dir;
    prepare_output_dir(dir)?;

    let mut out = csv_writer(dir, METRICS_CSV)?;
    let mut header = vec![
        "client_id",
        "first_date",
        "as_of",
        "duration_days",
        "stays",
        "in_shelter_percent",
        "active",
    ];
    if !config.no_labels {
        header.push("label");
    }
    out.write_record(&header)?;

    let mut rows = 0;
    for t in &loaded.timelines {
        let metrics = match as_of {
            Some(date) if date < t.first_date() => continue,
            Some(date) => compute_sam_metrics(t, date, &config.sam)?,
            None => evaluate_client(t, &config.sam).0,
        };
        let mut row = vec![
            t.client_id().to_string(),
            metrics.first_date.to_string(),
            metrics.as_of.to_string(),
            metrics.duration_days.to_string(),
            metrics.stays_in_window.to_string(),
            format!("{:.2}", metrics.in_shelter_percent),
            metrics.active.to_string(),
        ];
        if !config.no_labels {
            row.push(classify(&metrics, &config.sam).to_string());
        }
        out.write_record(&row)?;
        rows += 1;
    }
    out.flush().map_err(io_err(&dir.join(METRICS_CSV)))?;

    let outcome = MetricsOutcome {
        ingest: loaded.summary,
        diagnostics: loaded.diagnostics,
        rows,
        as_of,
    };
    write_manifest(config, "metrics", Some(loaded.digest), Some(loaded.summary), &outcome, &[METRICS_CSV])?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
    pub era: Era,
    pub cohort_size: usize,
    pub alpha_percent: f64,
    /// Fraction of cohort clients given the same label by SAM and clustering.
    pub accuracy: f64,
    pub agreement_by_label: PerLabel<LabelAgreement>,
    pub sweep: AlphaSweep,
    pub cluster_groups: PerLabel<GroupStats>,
    pub sam_groups: PerLabel<GroupStats>,
    pub percentile_method: &'static str,
    pub median_method: &'static str,
    pub episode_gap_days: u32,
}

/// Ingest, select the era cohort, label with SAM and K-means, compare.
pub fn run_compare(input: &Path, config: &RunConfig) -> Result<CompareReport, CommandError> {
    config.validate()?;
    let loaded = load_input(input, config.ingest_mode)?;
    let dir = &config.output_dir;
    prepare_output_dir(dir)?;

    let cohort = select_era_cohort(&loaded.timelines, config.era, &config.eras);
    if cohort.len() < config.cluster.k {
        return Err(ClusterError::TooFewClients {
            clients: cohort.len(),
            k: config.cluster.k,
        }
        .into());
    }
    let sam = LabeledCohort::from_sam(&cohort, &config.sam);
    let features = episode_features(&cohort, DEFAULT_GAP_DAYS);
    let rows: Vec<FeatureRow> = features.iter().map(FeatureRow::from).collect();
    let model = map_clusters_to_labels(fit_kmeans(&rows, &config.cluster)?)?;
    let clustered = LabeledCohort::new(LabelSource::Cluster, model.labels());

    let report = CompareReport {
        diagnostics: loaded.diagnostics,
        era: config.era,
        cohort_size: cohort.len(),
        alpha_percent: config.sam.alpha_percent,
        accuracy: accuracy(&clustered, &sam)?,
        agreement_by_label: agreement_by_label(&clustered, &sam)?,
        sweep: sweep_alpha(&cohort, &clustered, &default_alpha_grid(), &config.sam)?,
        cluster_groups: group_stats(&clustered, &features)?,
        sam_groups: group_stats(&sam, &features)?,
        percentile_method: "nearest-rank, rank ceil(0.9 n)",
        median_method: "nearest-rank, lower central value for even n",
        episode_gap_days: DEFAULT_GAP_DAYS,
    };

    write_json(dir, COMPARE_REPORT, &report)?;
    write_group_stats_csv(dir, &report)?;
    write_sweep_csv(dir, &report.sweep)?;
    let summary: ClusterSummary = model.summary();
    write_json(dir, CLUSTER_MODEL_JSON, &summary)?;
    write_manifest(
        config,
        "compare",
        Some(loaded.digest),
        Some(loaded.summary),
        serde_json::json!({ "cohort_size": cohort.len(), "accuracy": report.accuracy }),
        &[COMPARE_REPORT, GROUP_STATS_CSV, ALPHA_SWEEP_CSV, CLUSTER_MODEL_JSON],
    )?;
    Ok(report)
}

fn write_group_stats_csv(dir: &Path, report: &CompareReport) -> Result<(), CommandError> {
    let mut out = csv_writer(dir, GROUP_STATS_CSV)?;
    out.write_record([
        "group",
        "source",
        "n",
        "cohort_size",
        "share_percent",
        "stays_mean",
        "stays_median",
        "stays_upper_decile",
        "episodes_mean",
        "episodes_median",
        "episodes_upper_decile",
    ])?;
    for label in AccessLabel::ALL {
        for (source, groups) in [
            (LabelSource::Cluster, &report.cluster_groups),
            (LabelSource::Sam, &report.sam_groups),
        ] {
            let g = &groups[label];
            let dist = |d: &Option<crate::evaluation::Distribution>| match d {
                Some(d) => [format!("{:.2}", d.mean), d.median.to_string(), d.upper_decile.to_string()],
                None => Default::default(),
            };
            let mut row = vec![
                label.as_str().to_owned(),
                source.as_str().to_owned(),
                g.n.to_string(),
                report.cohort_size.to_string(),
                format!("{:.2}", g.share_percent),
            ];
            row.extend(dist(&g.stays));
            row.extend(dist(&g.episodes));
            out.write_record(&row)?;
        }
    }
    out.flush().map_err(io_err(&dir.join(GROUP_STATS_CSV)))
}

fn write_sweep_csv(dir: &Path, sweep: &AlphaSweep) -> Result<(), CommandError> {
    let mut out = csv_writer(dir, ALPHA_SWEEP_CSV)?;
    out.write_record(["alpha_percent", "accuracy_percent"])?;
    for p in &sweep.points {
        out.write_record([format!("{:.2}", p.alpha_percent), format!("{:.2}", 100.0 * p.accuracy)])?;
    }
    out.flush().map_err(io_err(&dir.join(ALPHA_SWEEP_CSV)))
}

#[derive(Debug, Clone, Serialize)]
pub struct TimelineOutcome {
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
    pub origin: NaiveDate,
    pub end: NaiveDate,
    pub bins: usize,
    pub clients_binned: u64,
}

/// Quarterly percent-change and occupancy-share tables for SAM labels.
pub fn run_timeline(input: &Path, config: &RunConfig) -> Result<TimelineOutcome, CommandError> {
    config.validate()?;
    let loaded = load_input(input, config.ingest_mode)?;
    let dir = &config.output_dir;
    prepare_output_dir(dir)?;

    let origin = config.timeline_origin;
    let end = match config.timeline_end {
        Some(end) => end,
        None => {
            let latest = loaded.timelines.iter().map(ClientTimeline::first_date).max();
            next_quarter(latest.unwrap_or(origin).max(origin))
        }
    };
    let labels = LabeledCohort::from_sam(&loaded.timelines, &config.sam);
    let series = occupancy_share(&loaded.timelines, &labels, origin, end)?;

    write_percent_change_csv(create(dir, PERCENT_CHANGE_CSV)?, &series)?;
    write_occupancy_csv(create(dir, OCCUPANCY_SHARE_CSV)?, &series)?;
    write_counts_csv(create(dir, QUARTERLY_COUNTS_CSV)?, &series)?;

    let outcome = TimelineOutcome {
        diagnostics: loaded.diagnostics,
        origin,
        end,
        bins: series.bins.len(),
        clients_binned: series.bins.iter().map(|b| b.total_clients()).sum(),
    };
    write_manifest(
        config,
        "timeline",
        Some(loaded.digest),
        Some(loaded.summary),
        &outcome,
        &[PERCENT_CHANGE_CSV, OCCUPANCY_SHARE_CSV, QUARTERLY_COUNTS_CSV],
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateOutcome {
    pub seed: u64,
    pub clients: usize,
    pub records: usize,
    pub truth_counts: PerLabel<usize>,
    pub scenario: ScenarioFile,
}

/// Generates a synthetic population from a scenario file. `seed`
/// overrides the scenario's own seed.
pub fn run_generate(scenario_path: &Path, config: &RunConfig, seed: Option<u64>) -> Result<GenerateOutcome, CommandError> {
    if !scenario_path.is_file() {
        return Err(CommandError::InputNotFound(scenario_path.to_owned()));
    }
    let mut file = ScenarioFile::from_path(scenario_path)?;
    if let Some(seed) = seed {
        file.scenario.seed = seed;
    }
    let population = generate_population(&file.scenario, &file.archetypes)?;
    let dir = &config.output_dir;
    prepare_output_dir(dir)?;
    write_records(create(dir, RECORDS_CSV)?, &population.records)?;
    write_truth_csv(create(dir, TRUTH_CSV)?, &population.truth)?;

    let bytes = fs::read(scenario_path).map_err(io_err(scenario_path))?;
    let digest = InputDigest {
        path: scenario_path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    };
    let outcome = GenerateOutcome {
        seed: file.scenario.seed,
        clients: population.truth.len(),
        records: population.records.len(),
        truth_counts: truth_counts(&population.truth),
        scenario: file,
    };
    write_manifest(config, "generate", Some(digest), None, &outcome, &[RECORDS_CSV, TRUTH_CSV])?;
    Ok(outcome)
}

/// Opens a truth file written by `generate`.
pub fn read_truth(path: &Path) -> Result<LabeledCohort, CommandError> {
    let f = File::open(path).map_err(io_err(path))?;
    let truth = crate::synth::read_truth_csv(BufReader::new(f))?;
    Ok(LabeledCohort::new(LabelSource::Truth, truth))
}
