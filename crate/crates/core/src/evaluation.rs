//! Agreement between labelings and per-group cohort statistics.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::episodes::EpisodeSummary;
use crate::ingest::{ClientId, ClientTimeline};
use crate::label::{AccessLabel, PerLabel};
use crate::sam::{classify, evaluate_client, SamConfig, SamMetrics};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(
        "labelings cover different clients ({} only in truth, {} only in prediction; first: {:?})",
        only_in_truth.len(),
        only_in_predicted.len(),
        only_in_truth.first().or(only_in_predicted.first()).map(ClientId::as_str)
    )]
    ClientSetMismatch {
        only_in_truth: Vec<ClientId>,
        only_in_predicted: Vec<ClientId>,
    },
    #[error("cannot score an empty cohort")]
    EmptyCohort,
    #[error("alpha grid is empty")]
    EmptyGrid,
    #[error("alpha grid value {0} is outside (0, 100)")]
    AlphaOutOfRange(f64),
    #[error("no episode features for labeled client `{0}`")]
    MissingFeatures(ClientId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Sam,
    Cluster,
    /// Generator ground truth.
    Truth,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Sam => "SAM",
            LabelSource::Cluster => "cluster",
            LabelSource::Truth => "truth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledCohort {
    pub source: LabelSource,
    pub labels: BTreeMap<ClientId, AccessLabel>,
}

impl LabeledCohort {
    pub fn new(source: LabelSource, labels: BTreeMap<ClientId, AccessLabel>) -> Self {
        LabeledCohort { source, labels }
    }

    /// SAM labels at the evaluation horizon for every timeline.
    pub fn from_sam(timelines: &[ClientTimeline], config: &SamConfig) -> Self {
        let labels = timelines
            .iter()
            .map(|t| (t.client_id().clone(), evaluate_client(t, config).1))
            .collect();
        LabeledCohort::new(LabelSource::Sam, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, client: &ClientId) -> Option<AccessLabel> {
        self.labels.get(client).copied()
    }
}

fn check_same_clients(a: &LabeledCohort, b: &LabeledCohort) -> Result<(), EvalError> {
    if a.labels.len() == b.labels.len() && a.labels.keys().eq(b.labels.keys()) {
        return Ok(());
    }
    let only_in_truth = a.labels.keys().filter(|k| !b.labels.contains_key(*k)).cloned().collect();
    let only_in_predicted = b.labels.keys().filter(|k| !a.labels.contains_key(*k)).cloned().collect();
    Err(EvalError::ClientSetMismatch {
        only_in_truth,
        only_in_predicted,
    })
}

/// Fraction of clients given the same label by both labelings.
pub fn accuracy(truth: &LabeledCohort, predicted: &LabeledCohort) -> Result<f64, EvalError> {
    check_same_clients(truth, predicted)?;
    if truth.is_empty() {
        return Err(EvalError::EmptyCohort);
    }
    let agree = truth
        .labels
        .values()
        .zip(predicted.labels.values())
        .filter(|(a, b)| a == b)
        .count();
    Ok(agree as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LabelAgreement {
    /// Clients carrying this label in the truth labeling.
    pub truth: usize,
    pub predicted: usize,
    /// Clients carrying this label in both.
    pub both: usize,
}

/// Per-label breakdown of [`accuracy`].
pub fn agreement_by_label(
    truth: &LabeledCohort,
    predicted: &LabeledCohort,
) -> Result<PerLabel<LabelAgreement>, EvalError> {
    check_same_clients(truth, predicted)?;
    let mut out = PerLabel::<LabelAgreement>::default();
    for (t, p) in truth.labels.values().zip(predicted.labels.values()) {
        out[*t].truth += 1;
        out[*p].predicted += 1;
        if t == p {
            out[*t].both += 1;
        }
    }
    Ok(out)
}

/// 5, 10, ..., 95.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| f64::from(i) * 5.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha_percent: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSweep {
    pub points: Vec<SweepPoint>,
    /// Highest accuracy; the smallest alpha among ties.
    pub best: SweepPoint,
}

/// Re-labels the cohort with SAM at every grid alpha and scores each
/// labeling against `truth`.
pub fn sweep_alpha(
    timelines: &[ClientTimeline],
    truth: &LabeledCohort,
    grid: &[f64],
    config: &SamConfig,
) -> Result<AlphaSweep, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    if let Some(&a) = grid.iter().find(|a| !(**a > 0.0 && **a < 100.0)) {
        return Err(EvalError::AlphaOutOfRange(a));
    }
    let metrics: Vec<(ClientId, SamMetrics)> = timelines
        .iter()
        .map(|t| (t.client_id().clone(), evaluate_client(t, config).0))
        .collect();

    let points = grid
        .par_iter()
        .map(|&alpha| {
            let cfg = config.with_alpha(alpha);
            let labels = metrics.iter().map(|(id, m)| (id.clone(), classify(m, &cfg))).collect();
            let predicted = LabeledCohort::new(LabelSource::Sam, labels);
            accuracy(truth, &predicted).map(|accuracy| SweepPoint {
                alpha_percent: alpha,
                accuracy,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let best = *points
        .iter()
        .reduce(|best, p| {
            let better = p.accuracy > best.accuracy
                || (p.accuracy == best.accuracy && p.alpha_percent < best.alpha_percent);
            if better {
                p
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    Ok(AlphaSweep { points, best })
}

/// Mean, median and upper-decile threshold of a group.
///
/// Median and upper decile use nearest rank on the ascending sort: the
/// values at ranks `ceil(n/2)` and `ceil(9n/10)`. The median of an even
/// group is therefore the lower central value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distribution {
    pub mean: f64,
    pub median: f64,
    pub upper_decile: f64,
}

/// Value at nearest rank `ceil(n * num / den)` (1-based) of a sorted slice.
pub fn nearest_rank(sorted: &[u32], num: usize, den: usize) -> Option<u32> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (sorted.len() * num).div_ceil(den).max(1);
    Some(sorted[rank - 1])
}

impl Distribution {
    pub fn of(values: &[u32]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let sum: u64 = sorted.iter().map(|&v| u64::from(v)).sum();
        Some(Distribution {
            mean: sum as f64 / sorted.len() as f64,
            median: f64::from(nearest_rank(&sorted, 1, 2)?),
            upper_decile: f64::from(nearest_rank(&sorted, 9, 10)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub label: AccessLabel,
    pub n: usize,
    pub share_percent: f64,
    /// `None` for an empty group.
    pub stays: Option<Distribution>,
    pub episodes: Option<Distribution>,
}

/// Stays and episodes statistics for each labeled group.
pub fn group_stats(labels: &LabeledCohort, features: &[EpisodeSummary]) -> Result<PerLabel<GroupStats>, EvalError> {
    let by_client: HashMap<&ClientId, &EpisodeSummary> = features.iter().map(|f| (&f.client_id, f)).collect();
    let mut stays = PerLabel::<Vec<u32>>::default();
    let mut episodes = PerLabel::<Vec<u32>>::default();
    for (client, label) in &labels.labels {
        let f = by_client.get(client).ok_or_else(|| EvalError::MissingFeatures(client.clone()))?;
        stays[*label].push(f.total_stays);
        episodes[*label].push(f.total_episodes);
    }
    let total = labels.len();
    Ok(PerLabel::from_fn(|label| {
        let n = stays[label].len();
        GroupStats {
            label,
            n,
            share_percent: if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 },
            stays: Distribution::of(&stays[label]),
            episodes: Distribution::of(&episodes[label]),
        }
    }))
}

fn fmt_dist(d: &Option<Distribution>) -> String {
    match d {
        Some(d) => format!("{:.2} / {} / {}", d.mean, d.median, d.upper_decile),
        None => "-".to_owned(),
    }
}

/// Plain-text table with one row per (label, source), alternating sources.
pub fn format_group_table(groups: &[(LabelSource, &PerLabel<GroupStats>)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>24} | {:>22} | {:>24} | {:>24}",
        "", "N", "Stays (mean/med/p90)", "Episodes (mean/med/p90)"
    );
    for label in AccessLabel::ALL {
        for (source, stats) in groups {
            let g = &stats[label];
            let total: usize = stats.iter().map(|(_, s)| s.n).sum();
            let _ = writeln!(
                out,
                "{:>24} | {:>22} | {:>24} | {:>24}",
                format!("{} - {}", label.title(), source.as_str()),
                format!("{}/{} ({:.2}%)", g.n, total, g.share_percent),
                fmt_dist(&g.stays),
                fmt_dist(&g.episodes),
            );
        }
    }
    out
}
