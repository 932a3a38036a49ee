//! Gap-based episode segmentation over a client's full record.

use serde::Serialize;

use crate::ingest::{ClientId, ClientTimeline};

/// Consecutive stays fewer than this many days apart share an episode.
pub const DEFAULT_GAP_DAYS: u32 = 30;

/// Clustering features for one client.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EpisodeSummary {
    pub client_id: ClientId,
    pub total_stays: u32,
    pub total_episodes: u32,
}

/// Counts stays and episodes. A gap of exactly `gap_days` between
/// consecutive stays starts a new episode.
pub fn count_episodes(timeline: &ClientTimeline, gap_days: u32) -> EpisodeSummary {
    let breaks = timeline
        .dates()
        .windows(2)
        .filter(|w| (w[1] - w[0]).num_days() >= i64::from(gap_days))
        .count();
    EpisodeSummary {
        client_id: timeline.client_id().clone(),
        total_stays: timeline.len() as u32,
        total_episodes: 1 + breaks as u32,
    }
}

pub fn episode_features(timelines: &[ClientTimeline], gap_days: u32) -> Vec<EpisodeSummary> {
    timelines.iter().map(|t| count_episodes(t, gap_days)).collect()
}
