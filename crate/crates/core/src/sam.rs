//! Access metrics and the three classification rules.
//!
//! For a client evaluated at an as-of date:
//!
//! - shelter duration is the number of days since the first stay
//!   (`as_of - first`, floored at 1),
//! - the in-shelter percentage is the share of those duration days, starting
//!   at the first stay, on which the client stayed,
//! - the client is active when the last stay on or before `as_of` is fewer
//!   than `active_threshold_days` days back.
//!
//! Active clients above `alpha_percent` are chronic, active clients at or
//! below it are episodic, everyone inactive is transitional.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::ingest::ClientTimeline;
use crate::label::AccessLabel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamError {
    #[error("as-of date {as_of} precedes the first stay on {first}")]
    AsOfBeforeFirstStay { as_of: NaiveDate, first: NaiveDate },
    #[error("invalid SAM configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamConfig {
    /// A client is active if their last stay is fewer than this many days ago.
    pub active_threshold_days: u32,
    /// Days after the first stay at which a label is assigned.
    pub evaluation_horizon_days: u32,
    /// In-shelter percentage threshold separating chronic from episodic.
    pub alpha_percent: f64,
}

impl Default for SamConfig {
    fn default() -> Self {
        SamConfig {
            active_threshold_days: 30,
            evaluation_horizon_days: 90,
            alpha_percent: 85.0,
        }
    }
}

impl SamConfig {
    pub fn validate(&self) -> Result<(), SamError> {
        if self.active_threshold_days == 0 {
            return Err(SamError::InvalidConfig("active_threshold_days must be positive".into()));
        }
        if self.evaluation_horizon_days == 0 {
            return Err(SamError::InvalidConfig("evaluation_horizon_days must be positive".into()));
        }
        if !(self.alpha_percent > 0.0 && self.alpha_percent < 100.0) {
            return Err(SamError::InvalidConfig(format!(
                "alpha_percent must lie in (0, 100), got {}",
                self.alpha_percent
            )));
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha_percent: f64) -> Self {
        SamConfig { alpha_percent, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamMetrics {
    pub first_date: NaiveDate,
    pub as_of: NaiveDate,
    pub duration_days: u32,
    /// Stays among the `duration_days` days starting at `first_date`.
    pub stays_in_window: u32,
    /// `100 * stays_in_window / duration_days`.
    pub in_shelter_percent: f64,
    /// Days from the last stay on or before `as_of` to `as_of`.
    pub days_since_last_stay: u32,
    pub active: bool,
}

impl SamMetrics {
    /// Exact `in_shelter_percent > alpha` on the underlying ratio.
    pub fn exceeds_alpha(&self, alpha_percent: f64) -> bool {
        f64::from(self.stays_in_window) * 100.0 > alpha_percent * f64::from(self.duration_days)
    }
}

pub fn compute_sam_metrics(
    timeline: &ClientTimeline,
    as_of: NaiveDate,
    config: &SamConfig,
) -> Result<SamMetrics, SamError> {
    let first = timeline.first_date();
    if as_of < first {
        return Err(SamError::AsOfBeforeFirstStay { as_of, first });
    }
    let duration_days = ((as_of - first).num_days().max(1)) as u32;
    let window_end = first + Days::new(u64::from(duration_days));

    let dates = timeline.dates();
    let stays_in_window = dates.partition_point(|d| *d < window_end) as u32;
    // as_of >= first, so at least one date qualifies
    let last_considered = dates[dates.partition_point(|d| *d <= as_of) - 1];
    let days_since_last_stay = (as_of - last_considered).num_days() as u32;

    Ok(SamMetrics {
        first_date: first,
        as_of,
        duration_days,
        stays_in_window,
        in_shelter_percent: 100.0 * f64::from(stays_in_window) / f64::from(duration_days),
        days_since_last_stay,
        active: days_since_last_stay < config.active_threshold_days,
    })
}

pub fn classify(metrics: &SamMetrics, config: &SamConfig) -> AccessLabel {
    if !metrics.active {
        AccessLabel::Transitional
    } else if metrics.exceeds_alpha(config.alpha_percent) {
        AccessLabel::Chronic
    } else {
        AccessLabel::Episodic
    }
}

/// The as-of date at which a client is labeled.
pub fn evaluation_date(timeline: &ClientTimeline, config: &SamConfig) -> NaiveDate {
    timeline.first_date() + Days::new(u64::from(config.evaluation_horizon_days))
}

/// Metrics and label at `evaluation_horizon_days` after the first stay.
pub fn evaluate_client(timeline: &ClientTimeline, config: &SamConfig) -> (SamMetrics, AccessLabel) {
    let metrics = compute_sam_metrics(timeline, evaluation_date(timeline, config), config)
        .expect("evaluation date never precedes the first stay");
    let label = classify(&metrics, config);
    (metrics, label)
}
