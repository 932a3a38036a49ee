//! Brute-force oracles and random fixtures shared by integration tests.
//!
//! Oracles deliberately avoid the library's date arithmetic shortcuts:
//! they walk calendar days one at a time and scan vectors linearly.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shelter_sam::ingest::ClientId;
use shelter_sam::{AccessLabel, ClientTimeline, Era, EraConfig, StayRecord};

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn id(s: &str) -> ClientId {
    ClientId::new(s).unwrap()
}

fn step(mut d: NaiveDate, days: u32) -> NaiveDate {
    for _ in 0..days {
        d = d.succ_opt().unwrap();
    }
    d
}

/// Random client timelines with a mix of dense, sparse and bursty patterns.
pub fn random_timelines(seed: u64, n: usize) -> Vec<ClientTimeline> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = date(2012, 1, 1);
    (0..n)
        .map(|i| {
            let first = step(base, rng.random_range(0..3000));
            let mut dates = vec![first];
            let style = rng.random_range(0..4);
            let count = match style {
                0 => 1,
                1 => rng.random_range(1..10),
                _ => rng.random_range(10..250),
            };
            let mut day = first;
            for _ in 0..count {
                let gap = match style {
                    2 => rng.random_range(1..3),
                    3 => {
                        if rng.random_bool(0.1) {
                            rng.random_range(25..40)
                        } else {
                            1
                        }
                    }
                    _ => rng.random_range(1..60),
                };
                day = step(day, gap);
                dates.push(day);
            }
            ClientTimeline::new(format!("r{i:05}"), dates).unwrap()
        })
        .collect()
}

/// Records expanded from timelines, with duplicates sprinkled in and the
/// order scrambled.
pub fn records_with_duplicates(timelines: &[ClientTimeline], seed: u64) -> Vec<StayRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for t in timelines {
        for d in t.dates() {
            records.push(StayRecord::new(t.client_id().clone(), *d));
            if rng.random_bool(0.1) {
                records.push(StayRecord::new(t.client_id().clone(), *d));
            }
        }
    }
    for i in (1..records.len()).rev() {
        let j = rng.random_range(0..=i);
        records.swap(i, j);
    }
    records
}

/// Group/unique/sort by nested loops.
pub fn timelines_oracle(records: &[StayRecord]) -> Vec<(String, Vec<NaiveDate>)> {
    let mut ids: Vec<String> = Vec::new();
    for r in records {
        if !ids.iter().any(|x| x == r.client_id.as_str()) {
            ids.push(r.client_id.as_str().to_owned());
        }
    }
    ids.sort();
    ids.into_iter()
        .map(|cid| {
            let mut dates: Vec<NaiveDate> = Vec::new();
            for r in records {
                if r.client_id.as_str() == cid && !dates.contains(&r.date) {
                    dates.push(r.date);
                }
            }
            dates.sort();
            (cid, dates)
        })
        .collect()
}

pub fn era_contains_oracle(era: Era, d: NaiveDate, cfg: &EraConfig) -> bool {
    match era {
        Era::HousingReady => d < cfg.housing_ready_end,
        Era::HousingFirst => d >= cfg.housing_ready_end && d < cfg.housing_first_end,
        Era::Covid19 => d >= cfg.housing_first_end,
    }
}

/// Whole record inside the era, using a per-client min/max scan.
pub fn era_member_oracle(dates: &[NaiveDate], era: Era, cfg: &EraConfig) -> bool {
    let mut lo = dates[0];
    let mut hi = dates[0];
    for d in dates {
        if *d < lo {
            lo = *d;
        }
        if *d > hi {
            hi = *d;
        }
    }
    era_contains_oracle(era, lo, cfg) && era_contains_oracle(era, hi, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMetrics {
    pub duration_days: u32,
    pub stays: u32,
    pub percent: f64,
    pub days_since_last: u32,
    pub active: bool,
}

/// Day-by-day SAM metrics.
pub fn sam_oracle(dates: &[NaiveDate], as_of: NaiveDate, threshold: u32) -> OracleMetrics {
    let first = *dates.iter().min().unwrap();
    assert!(as_of >= first);
    let mut elapsed = 0u32;
    let mut day = first;
    while day < as_of {
        day = day.succ_opt().unwrap();
        elapsed += 1;
    }
    let duration = elapsed.max(1);
    let mut stays = 0;
    let mut day = first;
    for _ in 0..duration {
        if dates.contains(&day) {
            stays += 1;
        }
        day = day.succ_opt().unwrap();
    }
    let mut back = 0;
    let mut day = as_of;
    while !dates.contains(&day) {
        day = day.pred_opt().unwrap();
        back += 1;
    }
    OracleMetrics {
        duration_days: duration,
        stays,
        percent: 100.0 * stays as f64 / duration as f64,
        days_since_last: back,
        active: back < threshold,
    }
}

/// The three labeling rules, written directly from their statement.
pub fn rule_oracle(active: bool, stays: u32, duration: u32, alpha: f64) -> AccessLabel {
    if !active {
        return AccessLabel::Transitional;
    }
    // percentage strictly greater than alpha, compared without division
    if (stays as f64) * 100.0 > alpha * duration as f64 {
        AccessLabel::Chronic
    } else {
        AccessLabel::Episodic
    }
}

pub fn horizon_oracle(dates: &[NaiveDate], horizon: u32, threshold: u32, alpha: f64) -> (OracleMetrics, AccessLabel) {
    let first = *dates.iter().min().unwrap();
    let m = sam_oracle(dates, step(first, horizon), threshold);
    (m, rule_oracle(m.active, m.stays, m.duration_days, alpha))
}

/// (stays, episodes) by walking every calendar day from first to last stay.
pub fn episodes_oracle(dates: &[NaiveDate], gap_days: u32) -> (u32, u32) {
    let first = *dates.iter().min().unwrap();
    let last = *dates.iter().max().unwrap();
    let set: HashSet<NaiveDate> = dates.iter().copied().collect();
    let mut episodes = 1;
    let mut since_prev = 0u32;
    let mut day = first;
    while day < last {
        day = day.succ_opt().unwrap();
        since_prev += 1;
        if set.contains(&day) {
            if since_prev >= gap_days {
                episodes += 1;
            }
            since_prev = 0;
        }
    }
    (set.len() as u32, episodes)
}

/// Mean, median, upper decile by definition on a full sort: the smallest
/// value whose cumulative count reaches the required share.
pub fn distribution_oracle(values: &[u32]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort();
    let n = v.len();
    let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
    let smallest_reaching = |num: usize, den: usize| {
        for &x in &v {
            let at_or_below = v.iter().filter(|&&y| y <= x).count();
            if at_or_below * den >= num * n {
                return x as f64;
            }
        }
        unreachable!()
    };
    (mean, smallest_reaching(1, 2), smallest_reaching(9, 10))
}

/// Quarter starts from `origin` while before `end`, built by month counting.
pub fn quarter_bins_oracle(origin: NaiveDate, end: NaiveDate) -> Vec<(NaiveDate, NaiveDate)> {
    let mut bins = Vec::new();
    let (mut y, mut m) = (origin.year(), origin.month());
    loop {
        let start = date(y, m, 1);
        if start >= end {
            break;
        }
        m += 3;
        if m > 12 {
            m -= 12;
            y += 1;
        }
        bins.push((start, date(y, m, 1)));
    }
    bins
}

/// Per-bin client counts by a clients x bins double loop.
pub fn binning_oracle(
    timelines: &[ClientTimeline],
    labels: &BTreeMap<ClientId, AccessLabel>,
    origin: NaiveDate,
    end: NaiveDate,
) -> Vec<[u64; 3]> {
    let bins = quarter_bins_oracle(origin, end);
    let mut out = vec![[0u64; 3]; bins.len()];
    for (i, (lo, hi)) in bins.iter().enumerate() {
        for t in timelines {
            let first = *t.dates().iter().min().unwrap();
            if first >= *lo && first < *hi && first < end {
                out[i][labels[t.client_id()].index()] += 1;
            }
        }
    }
    out
}

/// Per-bin stay-day tallies by enumerating every distinct stay record.
pub fn occupancy_oracle(
    records: &[StayRecord],
    labels: &BTreeMap<ClientId, AccessLabel>,
    origin: NaiveDate,
    end: NaiveDate,
) -> Vec<[u64; 3]> {
    let bins = quarter_bins_oracle(origin, end);
    let mut out = vec![[0u64; 3]; bins.len()];
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert((r.client_id.clone(), r.date)) {
            continue;
        }
        for (i, (lo, hi)) in bins.iter().enumerate() {
            if r.date >= *lo && r.date < *hi && r.date < end {
                out[i][labels[&r.client_id].index()] += 1;
            }
        }
    }
    out
}

pub fn percent_change_oracle(counts: &[u64]) -> Option<Vec<f64>> {
    let base = *counts.first()? as f64;
    if base == 0.0 {
        return None;
    }
    Some(counts.iter().map(|&c| (c as f64 / base - 1.0) * 100.0).collect())
}

pub fn random_labels(timelines: &[ClientTimeline], seed: u64) -> BTreeMap<ClientId, AccessLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    timelines
        .iter()
        .map(|t| (t.client_id().clone(), AccessLabel::ALL[rng.random_range(0..3)]))
        .collect()
}

/// Three Gaussian blobs (100 points each) with unit standard deviation,
/// at least 10 apart on every feature so they stay separated after
/// z-scoring. Returns rows and the planted blob index per client.
pub fn planted_blobs(seed: u64) -> (Vec<shelter_sam::FeatureRow>, BTreeMap<ClientId, usize>) {
    use rand_distr::{Distribution, Normal};
    let centers = [[5.0, 1.0], [100.0, 23.0], [900.0, 12.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut planted = BTreeMap::new();
    for (b, c) in centers.iter().enumerate() {
        for i in 0..100 {
            let cid = id(&format!("b{b}-{i:03}"));
            rows.push(shelter_sam::FeatureRow::new(
                cid.clone(),
                c[0] + noise.sample(&mut rng),
                c[1] + noise.sample(&mut rng),
            ));
            planted.insert(cid, b);
        }
    }
    (rows, planted)
}

/// True when two partitions agree up to renaming of cluster indices.
pub fn same_partition(a: &BTreeMap<ClientId, usize>, b: &BTreeMap<ClientId, usize>) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.len() == b.len()
        && a.iter().all(|(k, &x)| {
            let Some(&y) = b.get(k) else { return false };
            *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
        })
}
