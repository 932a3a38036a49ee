//! K-means typology baseline on (total stays, total episodes).
//!
//! Lloyd's algorithm with k-means++ seeding and multiple seeded restarts.
//! Each restart draws from its own ChaCha stream derived from the
//! configured seed, so restarts run in parallel and the result is the same
//! regardless of scheduling. Rows are sorted by client id before fitting;
//! input order never affects the outcome.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episodes::EpisodeSummary;
use crate::ingest::ClientId;
use crate::label::AccessLabel;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("need at least k = {k} clients to fit, got {clients}")]
    TooFewClients { clients: usize, k: usize },
    #[error("invalid cluster configuration: {0}")]
    InvalidConfig(String),
    #[error("client `{0}` appears more than once in the feature set")]
    DuplicateClient(ClientId),
    #[error("feature values for client `{0}` are not finite")]
    NonFiniteFeature(ClientId),
    #[error("cluster-to-label mapping requires k = 3, model has k = {0}")]
    UnsupportedK(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: u32,
    pub max_iterations: u32,
    /// Stop when no centroid moves farther than this (in fitting space).
    pub convergence_tolerance: f64,
    /// Z-score each feature before clustering.
    pub standardize: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 3,
            seed: 0,
            restarts: 50,
            max_iterations: 300,
            convergence_tolerance: 1e-9,
            standardize: true,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let bad = |msg: &str| Err(ClusterError::InvalidConfig(msg.to_owned()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.convergence_tolerance >= 0.0 && self.convergence_tolerance.is_finite()) {
            return bad("convergence_tolerance must be a non-negative finite number");
        }
        Ok(())
    }
}

/// One client's clustering features.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub client_id: ClientId,
    pub stays: f64,
    pub episodes: f64,
}

impl FeatureRow {
    pub fn new(client_id: ClientId, stays: f64, episodes: f64) -> Self {
        FeatureRow {
            client_id,
            stays,
            episodes,
        }
    }

    fn point(&self) -> Point {
        [self.stays, self.episodes]
    }
}

impl From<&EpisodeSummary> for FeatureRow {
    fn from(s: &EpisodeSummary) -> Self {
        FeatureRow::new(s.client_id.clone(), f64::from(s.total_stays), f64::from(s.total_episodes))
    }
}

/// Per-feature shift and scale applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Standardization {
    pub mean: Point,
    /// Population standard deviation, or 1 for a constant feature.
    pub scale: Point,
}

impl Standardization {
    fn fit(points: &[Point]) -> Self {
        let n = points.len() as f64;
        let mut mean = [0.0; 2];
        for p in points {
            mean[0] += p[0];
            mean[1] += p[1];
        }
        mean = [mean[0] / n, mean[1] / n];
        let mut var = [0.0; 2];
        for p in points {
            var[0] += (p[0] - mean[0]).powi(2);
            var[1] += (p[1] - mean[1]).powi(2);
        }
        let scale = var.map(|v| {
            let sd = (v / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        });
        Standardization { mean, scale }
    }

    fn apply(&self, p: Point) -> Point {
        [(p[0] - self.mean[0]) / self.scale[0], (p[1] - self.mean[1]) / self.scale[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Cluster means in original (stays, episodes) units.
    pub centroids: Vec<Point>,
    pub sizes: Vec<usize>,
    pub assignments: BTreeMap<ClientId, usize>,
    /// Label per cluster index once mapped.
    pub label_map: Option<Vec<AccessLabel>>,
    /// Within-cluster sum of squares in fitting space.
    pub wcss: f64,
    /// WCSS after every assignment step of the winning restart, ending with
    /// the value at the final centroids.
    pub wcss_trace: Vec<f64>,
    pub iterations: u32,
    pub converged: bool,
    pub best_restart: u32,
    pub standardization: Option<Standardization>,
}

impl ClusterModel {
    pub fn cluster_of(&self, client: &ClientId) -> Option<usize> {
        self.assignments.get(client).copied()
    }

    pub fn label_of(&self, client: &ClientId) -> Option<AccessLabel> {
        let map = self.label_map.as_ref()?;
        self.cluster_of(client).map(|c| map[c])
    }

    /// Client labels; empty until [`map_clusters_to_labels`] has run.
    pub fn labels(&self) -> BTreeMap<ClientId, AccessLabel> {
        match &self.label_map {
            Some(map) => self.assignments.iter().map(|(id, c)| (id.clone(), map[*c])).collect(),
            None => BTreeMap::new(),
        }
    }

    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            k: self.k,
            clusters: (0..self.k)
                .map(|i| ClusterEntry {
                    index: i,
                    label: self.label_map.as_ref().map(|m| m[i]),
                    mean_stays: self.centroids[i][0],
                    mean_episodes: self.centroids[i][1],
                    size: self.sizes[i],
                })
                .collect(),
            wcss: self.wcss,
            iterations: self.iterations,
            converged: self.converged,
            best_restart: self.best_restart,
            standardization: self.standardization,
        }
    }
}

/// Model export without per-client assignments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub clusters: Vec<ClusterEntry>,
    pub wcss: f64,
    pub iterations: u32,
    pub converged: bool,
    pub best_restart: u32,
    pub standardization: Option<Standardization>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterEntry {
    pub index: usize,
    pub label: Option<AccessLabel>,
    pub mean_stays: f64,
    pub mean_episodes: f64,
    pub size: usize,
}

#[inline]
fn sq_dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_seeds(points: &[Point], k: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a chosen centroid
            Err(_) => rng.random_range(0..points.len()),
        };
        let c = points[pick];
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

struct Run {
    assignments: Vec<usize>,
    wcss: f64,
    trace: Vec<f64>,
    iterations: u32,
    converged: bool,
}

fn wcss(points: &[Point], centroids: &[Point], assignments: &[usize]) -> f64 {
    points.iter().zip(assignments).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

fn means(points: &[Point], assignments: &[usize], previous: &[Point]) -> Vec<Point> {
    let k = previous.len();
    let mut sums = vec![[0.0; 2]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        sums[c][0] += p[0];
        sums[c][1] += p[1];
        counts[c] += 1;
    }
    (0..k)
        .map(|c| match counts[c] {
            0 => previous[c],
            n => [sums[c][0] / n as f64, sums[c][1] / n as f64],
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster.
/// Returns whether anything moved.
fn repair_empty_clusters(points: &[Point], centroids: &mut [Point], assignments: &mut [usize]) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &c in assignments.iter() {
        sizes[c] += 1;
    }
    let mut moved = false;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[c]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("n >= k guarantees a cluster with two or more points");
        sizes[assignments[i]] -= 1;
        sizes[empty] = 1;
        assignments[i] = empty;
        centroids[empty] = points[i];
        moved = true;
    }
    moved
}

fn lloyd(points: &[Point], config: &ClusterConfig, rng: &mut impl Rng) -> Run {
    let mut centroids = plus_plus_seeds(points, config.k, rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let mut changed = false;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (best, best_d) = nearest(p, &centroids);
            // stay put on ties so the objective strictly decreases on change
            if *a == usize::MAX || (best != *a && best_d < sq_dist(p, &centroids[*a])) {
                *a = best;
                changed = true;
            }
        }
        changed |= repair_empty_clusters(points, &mut centroids, &mut assignments);
        trace.push(wcss(points, &centroids, &assignments));
        if !changed {
            converged = true;
            break;
        }
        let updated = means(points, &assignments, &centroids);
        let movement = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if movement <= config.convergence_tolerance {
            converged = true;
            break;
        }
    }
    let final_wcss = wcss(points, &centroids, &assignments);
    trace.push(final_wcss);
    Run {
        assignments,
        wcss: final_wcss,
        trace,
        iterations,
        converged,
    }
}

/// Fits K-means to the feature rows.
pub fn fit_kmeans(rows: &[FeatureRow], config: &ClusterConfig) -> Result<ClusterModel, ClusterError> {
    config.validate()?;
    if rows.len() < config.k {
        return Err(ClusterError::TooFewClients {
            clients: rows.len(),
            k: config.k,
        });
    }
    let mut sorted: Vec<&FeatureRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.client_id.cmp(&b.client_id));
    for w in sorted.windows(2) {
        if w[0].client_id == w[1].client_id {
            return Err(ClusterError::DuplicateClient(w[0].client_id.clone()));
        }
    }
    if let Some(r) = sorted.iter().find(|r| !(r.stays.is_finite() && r.episodes.is_finite())) {
        return Err(ClusterError::NonFiniteFeature(r.client_id.clone()));
    }

    let raw: Vec<Point> = sorted.iter().map(|r| r.point()).collect();
    let standardization = config.standardize.then(|| Standardization::fit(&raw));
    let points: Vec<Point> = match &standardization {
        Some(s) => raw.iter().map(|p| s.apply(*p)).collect(),
        None => raw.clone(),
    };

    let runs: Vec<Run> = (0..config.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(u64::from(restart));
            lloyd(&points, config, &mut rng)
        })
        .collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, cand| if cand.1.wcss < best.1.wcss { cand } else { best })
        .expect("restarts >= 1");

    let centroids = means(&raw, &best.assignments, &vec![[0.0; 2]; config.k]);
    let mut sizes = vec![0; config.k];
    for &c in &best.assignments {
        sizes[c] += 1;
    }
    let assignments = sorted
        .iter()
        .zip(&best.assignments)
        .map(|(r, &c)| (r.client_id.clone(), c))
        .collect();

    Ok(ClusterModel {
        k: config.k,
        centroids,
        sizes,
        assignments,
        label_map: None,
        wcss: best.wcss,
        wcss_trace: best.trace,
        iterations: best.iterations,
        converged: best.converged,
        best_restart: best_restart as u32,
        standardization,
    })
}

/// Names the three clusters: the largest mean stays is chronic, the larger
/// mean episodes of the other two is episodic, the rest is transitional.
/// Ties go to the smaller cluster, then the lower index.
pub fn map_clusters_to_labels(mut model: ClusterModel) -> Result<ClusterModel, ClusterError> {
    if model.k != 3 {
        return Err(ClusterError::UnsupportedK(model.k));
    }
    let pick = |candidates: &[usize], feature: usize| -> usize {
        *candidates
            .iter()
            .max_by(|&&a, &&b| {
                model.centroids[a][feature]
                    .total_cmp(&model.centroids[b][feature])
                    .then(model.sizes[b].cmp(&model.sizes[a]))
                    .then(b.cmp(&a))
            })
            .expect("non-empty candidates")
    };
    let chronic = pick(&[0, 1, 2], 0);
    let rest: Vec<usize> = (0..3).filter(|&i| i != chronic).collect();
    let episodic = pick(&rest, 1);
    let mut map = vec![AccessLabel::Transitional; 3];
    map[chronic] = AccessLabel::Chronic;
    map[episodic] = AccessLabel::Episodic;
    model.label_map = Some(map);
    Ok(model)
}
