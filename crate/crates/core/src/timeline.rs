//! Quarterly cohort timelines.
//!
//! Clients are counted once, in the calendar quarter of their first stay.
//! Bed occupancy counts every stay-day of every labeled client in the
//! quarter the stay falls in, attributed to that client's label.

use std::io;

use chrono::{Datelike, Months, NaiveDate};
use serde::Serialize;

use crate::evaluation::LabeledCohort;
use crate::ingest::{ClientId, ClientTimeline};
use crate::label::{AccessLabel, PerLabel};

#[derive(Debug, thiserror::Error)]
pub enum TimelineError {
    #[error("timeline origin {origin} must precede end {end}")]
    EmptyRange { origin: NaiveDate, end: NaiveDate },
    #[error("timeline origin {0} is not the first day of a calendar quarter")]
    OriginNotQuarterStart(NaiveDate),
    #[error("client `{0}` has no label")]
    MissingLabel(ClientId),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Default series origin, the start of the third quarter of 2013.
pub fn default_origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 7, 1).unwrap()
}

pub fn quarter_start(date: NaiveDate) -> NaiveDate {
    let month = (date.month0() / 3) * 3 + 1;
    NaiveDate::from_ymd_opt(date.year(), month, 1).unwrap()
}

pub fn is_quarter_start(date: NaiveDate) -> bool {
    quarter_start(date) == date
}

pub fn next_quarter(start: NaiveDate) -> NaiveDate {
    quarter_start(start) + Months::new(3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineBin {
    /// First day of the quarter.
    pub start: NaiveDate,
    /// Clients whose first stay falls in this quarter.
    pub counts: PerLabel<u64>,
    /// Stay-days falling in this quarter, by client label.
    pub stay_days: PerLabel<u64>,
    pub total_stay_days: u64,
}

impl TimelineBin {
    fn empty(start: NaiveDate) -> Self {
        TimelineBin {
            start,
            counts: PerLabel::default(),
            stay_days: PerLabel::default(),
            total_stay_days: 0,
        }
    }

    pub fn total_clients(&self) -> u64 {
        self.counts.iter().map(|(_, c)| c).sum()
    }

    /// Percentage of stay-days per label; `None` when the quarter has none.
    pub fn shares(&self) -> Option<PerLabel<f64>> {
        (self.total_stay_days > 0)
            .then(|| self.stay_days.map(|_, d| 100.0 * *d as f64 / self.total_stay_days as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineSeries {
    pub origin: NaiveDate,
    /// Exclusive end of the covered period.
    pub end: NaiveDate,
    pub bins: Vec<TimelineBin>,
}

impl TimelineSeries {
    fn empty(origin: NaiveDate, end: NaiveDate) -> Result<Self, TimelineError> {
        if origin >= end {
            return Err(TimelineError::EmptyRange { origin, end });
        }
        if !is_quarter_start(origin) {
            return Err(TimelineError::OriginNotQuarterStart(origin));
        }
        let mut bins = Vec::new();
        let mut q = origin;
        while q < end {
            bins.push(TimelineBin::empty(q));
            q = next_quarter(q);
        }
        Ok(TimelineSeries { origin, end, bins })
    }

    /// Index of the bin holding `date`, if it lies in `[origin, end)`.
    pub fn bin_index(&self, date: NaiveDate) -> Option<usize> {
        if date < self.origin || date >= self.end {
            return None;
        }
        let months = (date.year() - self.origin.year()) * 12 + date.month0() as i32 - self.origin.month0() as i32;
        Some((months / 3) as usize)
    }

    /// Per-label client counts as one series per label.
    pub fn counts_by_label(&self) -> PerLabel<Vec<u64>> {
        PerLabel::from_fn(|label| self.bins.iter().map(|b| b.counts[label]).collect())
    }
}

fn label_lookup<'a>(
    timelines: &'a [ClientTimeline],
    labels: &LabeledCohort,
) -> Result<Vec<(&'a ClientTimeline, AccessLabel)>, TimelineError> {
    timelines
        .iter()
        .map(|t| {
            labels
                .get(t.client_id())
                .map(|l| (t, l))
                .ok_or_else(|| TimelineError::MissingLabel(t.client_id().clone()))
        })
        .collect()
}

/// Per-quarter client counts by label, keyed on each client's first stay.
pub fn bin_clients(
    timelines: &[ClientTimeline],
    labels: &LabeledCohort,
    origin: NaiveDate,
    end: NaiveDate,
) -> Result<TimelineSeries, TimelineError> {
    let mut series = TimelineSeries::empty(origin, end)?;
    for (t, label) in label_lookup(timelines, labels)? {
        if let Some(i) = series.bin_index(t.first_date()) {
            series.bins[i].counts[label] += 1;
        }
    }
    Ok(series)
}

/// Client counts plus per-quarter stay-day tallies by label.
pub fn occupancy_share(
    timelines: &[ClientTimeline],
    labels: &LabeledCohort,
    origin: NaiveDate,
    end: NaiveDate,
) -> Result<TimelineSeries, TimelineError> {
    let mut series = bin_clients(timelines, labels, origin, end)?;
    for (t, label) in label_lookup(timelines, labels)? {
        for &date in t.dates() {
            if let Some(i) = series.bin_index(date) {
                series.bins[i].stay_days[label] += 1;
            }
        }
    }
    for bin in &mut series.bins {
        bin.total_stay_days = bin.stay_days.iter().map(|(_, d)| d).sum();
    }
    Ok(series)
}

/// Percent change of each label's client count relative to the first bin.
/// A label with no clients in the first bin has no defined series.
pub fn percent_change(series: &TimelineSeries) -> PerLabel<Option<Vec<f64>>> {
    PerLabel::from_fn(|label| {
        let base = series.bins.first()?.counts[label];
        if base == 0 {
            return None;
        }
        let base = base as f64;
        Some(
            series
                .bins
                .iter()
                .map(|b| 100.0 * (b.counts[label] as f64 - base) / base)
                .collect(),
        )
    })
}

fn csv_writer<W: io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn pct(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_default()
}

const HEADER: [&str; 4] = ["quarter_start", "transitional", "episodic", "chronic"];

/// `quarter_start,transitional,episodic,chronic`; undefined series are empty cells.
pub fn write_percent_change_csv<W: io::Write>(w: W, series: &TimelineSeries) -> Result<(), TimelineError> {
    let change = percent_change(series);
    let mut out = csv_writer(w);
    out.write_record(HEADER)?;
    for (i, bin) in series.bins.iter().enumerate() {
        let cell = |label: AccessLabel| pct(change[label].as_ref().map(|s| s[i]));
        out.write_record([
            bin.start.to_string(),
            cell(AccessLabel::Transitional),
            cell(AccessLabel::Episodic),
            cell(AccessLabel::Chronic),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Shares per label plus `total_stay_days`; empty quarters have empty share cells.
pub fn write_occupancy_csv<W: io::Write>(w: W, series: &TimelineSeries) -> Result<(), TimelineError> {
    let mut out = csv_writer(w);
    out.write_record(HEADER.iter().copied().chain(["total_stay_days"]))?;
    for bin in &series.bins {
        let shares = bin.shares();
        let cell = |label: AccessLabel| pct(shares.as_ref().map(|s| s[label]));
        out.write_record([
            bin.start.to_string(),
            cell(AccessLabel::Transitional),
            cell(AccessLabel::Episodic),
            cell(AccessLabel::Chronic),
            bin.total_stay_days.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Raw per-quarter client counts.
pub fn write_counts_csv<W: io::Write>(w: W, series: &TimelineSeries) -> Result<(), TimelineError> {
    let mut out = csv_writer(w);
    out.write_record(HEADER)?;
    for bin in &series.bins {
        out.write_record([
            bin.start.to_string(),
            bin.counts.transitional.to_string(),
            bin.counts.episodic.to_string(),
            bin.counts.chronic.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::LabelSource;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn labeled(pairs: &[(&ClientTimeline, AccessLabel)]) -> LabeledCohort {
        LabeledCohort::new(
            LabelSource::Sam,
            pairs.iter().map(|(t, l)| (t.client_id().clone(), *l)).collect(),
        )
    }

    #[test]
    fn quarter_arithmetic() {
        assert_eq!(quarter_start(d(2014, 2, 10)), d(2014, 1, 1));
        assert_eq!(quarter_start(d(2014, 12, 31)), d(2014, 10, 1));
        assert_eq!(next_quarter(d(2014, 10, 1)), d(2015, 1, 1));
        assert!(is_quarter_start(d(2013, 7, 1)));
        assert!(!is_quarter_start(d(2013, 7, 2)));
    }

    #[test]
    fn client_counted_in_first_stay_quarter() {
        let t = ClientTimeline::new("a", vec![d(2014, 2, 10), d(2014, 5, 1)]).unwrap();
        let labels = labeled(&[(&t, AccessLabel::Chronic)]);
        let s = bin_clients(&[t], &labels, d(2013, 7, 1), d(2015, 1, 1)).unwrap();
        assert_eq!(s.bins.len(), 6);
        let i = s.bins.iter().position(|b| b.start == d(2014, 1, 1)).unwrap();
        assert_eq!(s.bins[i].counts.chronic, 1);
        assert_eq!(s.bins.iter().map(TimelineBin::total_clients).sum::<u64>(), 1);
    }

    #[test]
    fn no_clients_gives_zero_bins() {
        let labels = labeled(&[]);
        let s = occupancy_share(&[], &labels, d(2013, 7, 1), d(2014, 7, 1)).unwrap();
        assert_eq!(s.bins.len(), 4);
        assert!(s.bins.iter().all(|b| b.total_clients() == 0 && b.shares().is_none()));
    }

    #[test]
    fn range_validation() {
        let labels = labeled(&[]);
        assert!(matches!(
            bin_clients(&[], &labels, d(2014, 1, 1), d(2014, 1, 1)),
            Err(TimelineError::EmptyRange { .. })
        ));
        assert!(matches!(
            bin_clients(&[], &labels, d(2014, 1, 2), d(2015, 1, 1)),
            Err(TimelineError::OriginNotQuarterStart(_))
        ));
    }

    #[test]
    fn unlabeled_client_is_an_error() {
        let t = ClientTimeline::new("a", vec![d(2014, 2, 10)]).unwrap();
        assert!(matches!(
            bin_clients(&[t], &labeled(&[]), d(2014, 1, 1), d(2015, 1, 1)),
            Err(TimelineError::MissingLabel(_))
        ));
    }

    #[test]
    fn percent_change_formula() {
        let mut s = TimelineSeries::empty(d(2014, 1, 1), d(2014, 10, 1)).unwrap();
        for (bin, c) in s.bins.iter_mut().zip([10, 15, 5]) {
            bin.counts.chronic = c;
            bin.counts.episodic = 4;
        }
        let pc = percent_change(&s);
        assert_eq!(pc.chronic.unwrap(), vec![0.0, 50.0, -50.0]);
        assert_eq!(pc.episodic.unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(pc.transitional.is_none());
    }

    #[test]
    fn occupancy_shares() {
        let dates = |n: u64| (0..n).map(|i| d(2014, 1, 1) + chrono::Days::new(i)).collect::<Vec<_>>();
        let a = ClientTimeline::new("a", dates(30)).unwrap();
        let b = ClientTimeline::new("b", dates(10)).unwrap();
        let labels = labeled(&[(&a, AccessLabel::Chronic), (&b, AccessLabel::Transitional)]);
        let s = occupancy_share(&[a, b], &labels, d(2014, 1, 1), d(2014, 4, 1)).unwrap();
        let shares = s.bins[0].shares().unwrap();
        assert_eq!((shares.chronic, shares.transitional, shares.episodic), (75.0, 25.0, 0.0));
        assert_eq!(s.bins[0].total_stay_days, 40);
    }

    #[test]
    fn csv_tables() {
        let t = ClientTimeline::new("a", vec![d(2013, 7, 3), d(2013, 7, 4)]).unwrap();
        let labels = labeled(&[(&t, AccessLabel::Chronic)]);
        let s = occupancy_share(&[t], &labels, d(2013, 7, 1), d(2013, 10, 1)).unwrap();
        let mut buf = Vec::new();
        write_percent_change_csv(&mut buf, &s).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "quarter_start,transitional,episodic,chronic\n2013-07-01,,,0.00\n"
        );
        let mut buf = Vec::new();
        write_occupancy_csv(&mut buf, &s).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "quarter_start,transitional,episodic,chronic,total_stay_days\n2013-07-01,0.00,0.00,100.00,2\n"
        );
    }
}
