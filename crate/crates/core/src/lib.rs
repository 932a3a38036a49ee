//! Shelter access pattern analytics.
//!
//! The crate summarizes each client's emergency shelter use with three
//! quantities measured at an as-of date: shelter duration, in-shelter
//! percentage, and active status. From those it assigns the familiar
//! transitional / episodic / chronic typology, reproduces the K-means
//! typology baseline on (total stays, total episodes), compares the two
//! labelings, and aggregates labeled clients into quarterly timelines.
//!
//! Module map:
//!
//! - [`ingest`]: CSV parsing, per-day deduplication, era cohorts
//! - [`sam`]: access metrics and the classification rules
//! - [`episodes`]: gap-based episode segmentation
//! - [`cluster`]: seeded K-means baseline and cluster-to-label mapping
//! - [`evaluation`]: accuracy, alpha sweep, cohort statistics
//! - [`timeline`]: quarterly counts, percent change, occupancy shares
//! - [`synth`]: seeded synthetic populations with ground-truth archetypes
//! - [`commands`]: file-based pipelines behind the `sam` binary
//!
//! ```
//! use chrono::NaiveDate;
//! use shelter_sam::{ClientTimeline, SamConfig, compute_sam_metrics};
//!
//! let d = |day| NaiveDate::from_ymd_opt(2022, 4, day).unwrap();
//! let timeline = ClientTimeline::new("c1", vec![d(10), d(11), d(14), d(22)]).unwrap();
//! let config = SamConfig { active_threshold_days: 10, ..SamConfig::default() };
//! let m = compute_sam_metrics(&timeline, d(30), &config).unwrap();
//! assert_eq!((m.duration_days, m.in_shelter_percent, m.active), (20, 20.0, true));
//! ```

pub mod cluster;
pub mod commands;
pub mod episodes;
pub mod evaluation;
pub mod ingest;
mod label;
pub mod sam;
pub mod synth;
pub mod timeline;

pub use cluster::{fit_kmeans, map_clusters_to_labels, ClusterConfig, ClusterModel, FeatureRow};
pub use episodes::{count_episodes, EpisodeSummary, DEFAULT_GAP_DAYS};
pub use evaluation::{accuracy, group_stats, sweep_alpha, GroupStats, LabelSource, LabeledCohort};
pub use ingest::{
    build_timelines, parse_records, select_era_cohort, ClientId, ClientTimeline, Era, EraConfig,
    IngestMode, StayRecord,
};
pub use label::{AccessLabel, PerLabel};
pub use sam::{classify, compute_sam_metrics, evaluate_client, SamConfig, SamMetrics};
pub use timeline::{bin_clients, occupancy_share, percent_change, TimelineBin, TimelineSeries};
