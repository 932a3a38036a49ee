//! Seeded synthetic shelter populations.
//!
//! Each arriving client draws an archetype, a tenure, and a day-by-day
//! attendance pattern. Attendance inside an episode is Bernoulli per day;
//! tenures and, when configured, episode lengths and inter-episode gaps are
//! geometric (shape 1) or negative binomial (gamma-Poisson mixture) counts.
//! The generating archetype is recorded as ground truth.
//!
//! Arrivals are bounded by the scenario window; stays after an arrival run
//! their full course even past the window end, so every client carries a
//! complete evaluation horizon.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::ingest::{ClientId, Era, EraConfig, StayRecord};
use crate::label::{AccessLabel, PerLabel};
use crate::timeline::next_quarter;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scenario field `{field}`: {message}")]
    InvalidField { field: String, message: String },
    #[error("cannot parse scenario at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SynthError {
    SynthError::InvalidField {
        field: field.into(),
        message: message.into(),
    }
}

/// Episode structure within a client's tenure.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapModel {
    /// One continuous episode covering the whole tenure.
    #[default]
    None,
    /// Geometric episode lengths and gaps (days).
    Geometric { mean_episode_days: f64, mean_gap_days: f64 },
    /// Negative binomial episode lengths and gaps with gamma shape `shape`.
    NegativeBinomial {
        mean_episode_days: f64,
        mean_gap_days: f64,
        shape: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub label: AccessLabel,
    pub weight: f64,
    pub stay_probability_per_day: f64,
    pub mean_tenure_days: f64,
    /// Gamma shape of the tenure draw; 1 gives a geometric tenure.
    #[serde(default = "one")]
    pub tenure_shape: f64,
    #[serde(default)]
    pub gap_model: GapModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// First possible arrival date.
    pub start: NaiveDate,
    /// Arrivals happen strictly before this date.
    pub end: NaiveDate,
    /// Arrivals in a full calendar quarter; partial quarters are prorated.
    pub arrivals_per_quarter: u32,
    #[serde(default)]
    pub eras: EraConfig,
    /// Per-era weight multipliers by label; missing labels keep weight 1.
    #[serde(default)]
    pub era_modifiers: BTreeMap<Era, BTreeMap<AccessLabel, f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenario: ScenarioSpec,
    pub archetypes: Vec<ArchetypeSpec>,
}

impl ScenarioFile {
    /// Reads a `.json` or `.toml` scenario and validates it.
    pub fn from_path(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let file = if is_json { Self::from_json(&text)? } else { Self::from_toml(&text)? };
        Ok(file)
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| SynthError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| SynthError::Parse {
            path: ".".into(),
            message: e.to_string(),
        })?;
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| SynthError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        validate(&self.scenario, &self.archetypes)
    }
}

fn check_mean(field: String, v: f64) -> Result<(), SynthError> {
    if v.is_finite() && v >= 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be a finite number of days >= 1, got {v}")))
    }
}

fn check_shape(field: String, v: f64) -> Result<(), SynthError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

pub fn validate(scenario: &ScenarioSpec, archetypes: &[ArchetypeSpec]) -> Result<(), SynthError> {
    if scenario.start >= scenario.end {
        return Err(invalid("scenario.end", "must be after scenario.start"));
    }
    if scenario.arrivals_per_quarter == 0 {
        return Err(invalid("scenario.arrivals_per_quarter", "must be positive"));
    }
    scenario
        .eras
        .validate()
        .map_err(|e| invalid("scenario.eras", e.to_string()))?;
    if archetypes.is_empty() {
        return Err(invalid("archetypes", "at least one archetype is required"));
    }
    for (i, a) in archetypes.iter().enumerate() {
        let f = |name: &str| format!("archetypes[{i}].{name}");
        if !(0.0..=1.0).contains(&a.weight) {
            return Err(invalid(f("weight"), format!("must lie in [0, 1], got {}", a.weight)));
        }
        if !(a.stay_probability_per_day > 0.0 && a.stay_probability_per_day <= 1.0) {
            return Err(invalid(
                f("stay_probability_per_day"),
                format!("must lie in (0, 1], got {}", a.stay_probability_per_day),
            ));
        }
        check_mean(f("mean_tenure_days"), a.mean_tenure_days)?;
        check_shape(f("tenure_shape"), a.tenure_shape)?;
        match a.gap_model {
            GapModel::None => {}
            GapModel::Geometric { mean_episode_days, mean_gap_days } => {
                check_mean(f("gap_model.mean_episode_days"), mean_episode_days)?;
                check_mean(f("gap_model.mean_gap_days"), mean_gap_days)?;
            }
            GapModel::NegativeBinomial { mean_episode_days, mean_gap_days, shape } => {
                check_mean(f("gap_model.mean_episode_days"), mean_episode_days)?;
                check_mean(f("gap_model.mean_gap_days"), mean_gap_days)?;
                check_shape(f("gap_model.shape"), shape)?;
            }
        }
    }
    let total: f64 = archetypes.iter().map(|a| a.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid("archetypes[].weight", format!("weights sum to {total}, expected 1")));
    }
    for (era, mods) in &scenario.era_modifiers {
        for (label, m) in mods {
            if !(m.is_finite() && *m >= 0.0) {
                return Err(invalid(
                    format!("scenario.era_modifiers.{era}.{label}"),
                    format!("multiplier must be a non-negative number, got {m}"),
                ));
            }
        }
        let modified: f64 = archetypes.iter().map(|a| a.weight * mods.get(&a.label).copied().unwrap_or(1.0)).sum();
        if modified <= 0.0 {
            return Err(invalid(
                format!("scenario.era_modifiers.{era}"),
                "modifiers leave no archetype with positive weight",
            ));
        }
    }
    Ok(())
}

/// Archetypes separable by both SAM and the cluster baseline.
pub fn default_archetypes() -> Vec<ArchetypeSpec> {
    vec![
        ArchetypeSpec {
            label: AccessLabel::Transitional,
            weight: 0.80,
            stay_probability_per_day: 0.7,
            mean_tenure_days: 6.0,
            tenure_shape: 1.0,
            gap_model: GapModel::None,
        },
        ArchetypeSpec {
            label: AccessLabel::Episodic,
            weight: 0.14,
            stay_probability_per_day: 0.55,
            mean_tenure_days: 720.0,
            tenure_shape: 3.0,
            gap_model: GapModel::NegativeBinomial {
                mean_episode_days: 25.0,
                mean_gap_days: 70.0,
                shape: 2.0,
            },
        },
        ArchetypeSpec {
            label: AccessLabel::Chronic,
            weight: 0.06,
            stay_probability_per_day: 0.95,
            mean_tenure_days: 900.0,
            tenure_shape: 10.0,
            gap_model: GapModel::None,
        },
    ]
}

/// Default window and era boundaries with a Housing First chronic dip and
/// a pandemic rebound.
pub fn demo_scenario(seed: u64) -> ScenarioFile {
    let mut era_modifiers = BTreeMap::new();
    era_modifiers.insert(Era::HousingFirst, BTreeMap::from([(AccessLabel::Chronic, 0.0)]));
    era_modifiers.insert(Era::Covid19, BTreeMap::from([(AccessLabel::Chronic, 1.5)]));
    ScenarioFile {
        scenario: ScenarioSpec {
            start: NaiveDate::from_ymd_opt(2013, 7, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2022, 4, 1).unwrap(),
            arrivals_per_quarter: 300,
            eras: EraConfig::default(),
            era_modifiers,
            seed,
        },
        archetypes: default_archetypes(),
    }
}

/// Generated stay records plus the archetype label of every client.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    /// Sorted by date, then client id; one record per client-day.
    pub records: Vec<StayRecord>,
    pub truth: BTreeMap<ClientId, AccessLabel>,
}

/// Non-negative integer count with the given mean: geometric for shape 1,
/// otherwise a gamma-Poisson mixture.
fn count_draw(rng: &mut impl Rng, mean: f64, shape: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if shape == 1.0 {
        Geometric::new(1.0 / (1.0 + mean)).expect("probability in (0, 1)").sample(rng)
    } else {
        let lambda = Gamma::new(shape, mean / shape).expect("positive parameters").sample(rng);
        if lambda <= 0.0 {
            return 0;
        }
        Poisson::new(lambda).expect("positive rate").sample(rng) as u64
    }
}

/// Day offsets (from arrival) on which the client stays; always includes 0.
fn simulate_offsets(spec: &ArchetypeSpec, rng: &mut impl Rng) -> Vec<u64> {
    let tenure = 1 + count_draw(rng, spec.mean_tenure_days - 1.0, spec.tenure_shape);
    let p = spec.stay_probability_per_day;
    let mut offsets = vec![0];
    let (mean_episode, mean_gap, shape) = match spec.gap_model {
        GapModel::None => {
            offsets.extend((1..tenure).filter(|_| rng.random_bool(p)));
            return offsets;
        }
        GapModel::Geometric { mean_episode_days, mean_gap_days } => (mean_episode_days, mean_gap_days, 1.0),
        GapModel::NegativeBinomial { mean_episode_days, mean_gap_days, shape } => {
            (mean_episode_days, mean_gap_days, shape)
        }
    };
    let mut day = 0;
    loop {
        let episode_len = 1 + count_draw(rng, mean_episode - 1.0, shape);
        let episode_end = (day + episode_len).min(tenure);
        offsets.extend((day + 1..episode_end).filter(|_| rng.random_bool(p)));
        day = episode_end + 1 + count_draw(rng, mean_gap - 1.0, shape);
        if day >= tenure {
            break;
        }
        // returning to shelter opens the next episode
        offsets.push(day);
    }
    offsets
}

/// Generates a population; identical inputs give identical output.
pub fn generate_population(scenario: &ScenarioSpec, archetypes: &[ArchetypeSpec]) -> Result<Population, SynthError> {
    validate(scenario, archetypes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut era_pickers = BTreeMap::new();
    for era in Era::ALL {
        let mods = scenario.era_modifiers.get(&era);
        let weights: Vec<f64> = archetypes
            .iter()
            .map(|a| a.weight * mods.and_then(|m| m.get(&a.label)).copied().unwrap_or(1.0))
            .collect();
        let picker = WeightedIndex::new(&weights).map_err(|e| invalid(format!("scenario.era_modifiers.{era}"), e.to_string()))?;
        era_pickers.insert(era, picker);
    }

    let mut records = Vec::new();
    let mut truth = BTreeMap::new();
    let mut next_id = 0u64;
    let mut quarter = crate::timeline::quarter_start(scenario.start);
    while quarter < scenario.end {
        let q_end = next_quarter(quarter);
        let lo = quarter.max(scenario.start);
        let hi = q_end.min(scenario.end);
        let window = (hi - lo).num_days() as u64;
        let full = (q_end - quarter).num_days() as u64;
        let arrivals = (u64::from(scenario.arrivals_per_quarter) * window + full / 2) / full;
        let mut dates: Vec<NaiveDate> = (0..arrivals).map(|_| lo + Days::new(rng.random_range(0..window))).collect();
        dates.sort_unstable();
        for arrival in dates {
            let era = Era::of(arrival, &scenario.eras);
            let archetype = &archetypes[era_pickers[&era].sample(&mut rng)];
            next_id += 1;
            let id = ClientId::new(format!("c{next_id:07}")).expect("non-empty");
            for offset in simulate_offsets(archetype, &mut rng) {
                records.push(StayRecord::new(id.clone(), arrival + Days::new(offset)));
            }
            truth.insert(id, archetype.label);
        }
        quarter = q_end;
    }
    records.sort_unstable_by(|a, b| a.date.cmp(&b.date).then_with(|| a.client_id.cmp(&b.client_id)));
    Ok(Population { records, truth })
}

/// `client_id,label`.
pub fn write_truth_csv<W: io::Write>(w: W, truth: &BTreeMap<ClientId, AccessLabel>) -> Result<(), SynthError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["client_id", "label"])?;
    for (id, label) in truth {
        out.write_record([id.as_str(), label.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth_csv<R: io::Read>(r: R) -> Result<BTreeMap<ClientId, AccessLabel>, SynthError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut truth = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let field = || format!("truth row {}", i + 2);
        let id = ClientId::new(row.get(0).unwrap_or_default()).map_err(|e| invalid(field(), e.to_string()))?;
        let label = row
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|e: crate::label::ParseLabelError| invalid(field(), e.to_string()))?;
        truth.insert(id, label);
    }
    Ok(truth)
}

/// Label mix actually drawn, for quick sanity output.
pub fn truth_counts(truth: &BTreeMap<ClientId, AccessLabel>) -> PerLabel<usize> {
    let mut counts = PerLabel::default();
    for label in truth.values() {
        counts[*label] += 1;
    }
    counts
}
