//! Stay record ingestion.
//!
//! Input is a headed CSV with (at least) the columns `client_id` and `date`,
//! dates in `YYYY-MM-DD`. Each row is one client accessing shelter on one
//! calendar day; repeated rows for the same client-day collapse into a
//! single stay when timelines are built.

use std::collections::HashMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Opaque, already-anonymized client identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(String);

impl ClientId {
    pub fn new(id: impl Into<String>) -> Result<Self, IngestError> {
        let id = id.into();
        if id.is_empty() {
            return Err(IngestError::EmptyClientId);
        }
        Ok(ClientId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl From<&ClientId> for ClientId {
    fn from(id: &ClientId) -> Self {
        id.clone()
    }
}

/// One client accessing shelter on one calendar day.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StayRecord {
    pub client_id: ClientId,
    pub date: NaiveDate,
}

impl StayRecord {
    pub fn new(client_id: ClientId, date: NaiveDate) -> Self {
        StayRecord { client_id, date }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("input is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {message}")]
    Record { line: u64, message: String },
    #[error("client id must not be empty")]
    EmptyClientId,
    #[error("timeline for client `{0}` has no stay dates")]
    EmptyTimeline(String),
    #[error("era boundaries out of order: housing_ready_end {housing_ready_end} must precede housing_first_end {housing_first_end}")]
    EraOrder {
        housing_ready_end: NaiveDate,
        housing_first_end: NaiveDate,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How malformed rows are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestMode {
    /// The first malformed row aborts ingestion.
    Strict,
    /// Malformed rows are skipped and reported as diagnostics.
    #[default]
    Lenient,
}

/// A skipped row in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    /// Well-formed rows, in input order.
    pub records: Vec<StayRecord>,
    pub diagnostics: Vec<Diagnostic>,
    /// Data rows seen, excluding the header.
    pub rows_read: u64,
}

/// Parses a strict `YYYY-MM-DD` date.
pub fn parse_iso_date(s: &str) -> Result<NaiveDate, String> {
    let b = s.as_bytes();
    let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' || !digits(0..4) || !digits(5..7) || !digits(8..10)
    {
        return Err(format!("date `{s}` is not in YYYY-MM-DD form"));
    }
    let year: i32 = s[0..4].parse().map_err(|_| format!("bad year in `{s}`"))?;
    let month: u32 = s[5..7].parse().map_err(|_| format!("bad month in `{s}`"))?;
    let day: u32 = s[8..10].parse().map_err(|_| format!("bad day in `{s}`"))?;
    NaiveDate::from_ymd_opt(year, month, day).ok_or_else(|| format!("`{s}` is not a valid calendar date"))
}

/// Reads stay records from a headed CSV stream.
///
/// Extra columns are ignored. A missing `client_id` or `date` column is a
/// configuration error regardless of `mode`.
pub fn parse_records<R: io::Read>(source: R, mode: IngestMode) -> Result<ParsedRecords, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or(IngestError::MissingColumn(name))
    };
    let id_col = column("client_id")?;
    let date_col = column("date")?;

    let mut parsed = ParsedRecords::default();
    let mut row = csv::StringRecord::new();
    loop {
        let outcome = match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let line = row.position().map_or(0, |p| p.line());
                parsed.rows_read += 1;
                parse_row(&row, id_col, date_col).map_err(|message| Diagnostic { line, message })
            }
            Err(err) => match err.kind() {
                csv::ErrorKind::Utf8 { pos, .. } => {
                    parsed.rows_read += 1;
                    Err(Diagnostic {
                        line: pos.as_ref().map_or(0, |p| p.line()),
                        message: "row is not valid UTF-8".to_owned(),
                    })
                }
                _ => return Err(err.into()),
            },
        };
        match outcome {
            Ok(record) => parsed.records.push(record),
            Err(diag) => match mode {
                IngestMode::Strict => {
                    return Err(IngestError::Record {
                        line: diag.line,
                        message: diag.message,
                    })
                }
                IngestMode::Lenient => parsed.diagnostics.push(diag),
            },
        }
    }
    Ok(parsed)
}

fn parse_row(row: &csv::StringRecord, id_col: usize, date_col: usize) -> Result<StayRecord, String> {
    let id = row.get(id_col).ok_or("row is missing the client_id field")?;
    let date = row.get(date_col).ok_or("row is missing the date field")?;
    let client_id = ClientId::new(id).map_err(|e| e.to_string())?;
    Ok(StayRecord::new(client_id, parse_iso_date(date)?))
}

/// Writes records in the ingest CSV format.
pub fn write_records<W: io::Write>(writer: W, records: &[StayRecord]) -> Result<(), IngestError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    out.write_record(["client_id", "date"])?;
    for r in records {
        out.write_record([r.client_id.as_str(), &r.date.format("%Y-%m-%d").to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// A client's distinct stay dates in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ClientTimeline {
    client_id: ClientId,
    dates: Vec<NaiveDate>,
}

impl ClientTimeline {
    /// Builds a timeline from dates in any order; duplicates collapse.
    pub fn new(client_id: impl Into<String>, dates: Vec<NaiveDate>) -> Result<Self, IngestError> {
        Self::from_parts(ClientId::new(client_id)?, dates)
    }

    pub fn from_parts(client_id: ClientId, mut dates: Vec<NaiveDate>) -> Result<Self, IngestError> {
        if dates.is_empty() {
            return Err(IngestError::EmptyTimeline(client_id.0));
        }
        dates.sort_unstable();
        dates.dedup();
        Ok(ClientTimeline { client_id, dates })
    }

    pub fn client_id(&self) -> &ClientId {
        &self.client_id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    /// Always false; timelines hold at least one date.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Copy of this timeline keeping only dates on or before `cutoff`, or
    /// `None` when nothing remains.
    pub fn truncated(&self, cutoff: NaiveDate) -> Option<ClientTimeline> {
        let keep = self.dates.partition_point(|d| *d <= cutoff);
        (keep > 0).then(|| ClientTimeline {
            client_id: self.client_id.clone(),
            dates: self.dates[..keep].to_vec(),
        })
    }
}

/// Groups records by client, deduplicating client-days.
///
/// The result is ordered by client id.
pub fn build_timelines(records: &[StayRecord]) -> Vec<ClientTimeline> {
    let mut by_client: HashMap<&ClientId, Vec<NaiveDate>> = HashMap::new();
    for r in records {
        by_client.entry(&r.client_id).or_default().push(r.date);
    }
    let mut timelines: Vec<ClientTimeline> = by_client
        .into_iter()
        .map(|(id, mut dates)| {
            dates.sort_unstable();
            dates.dedup();
            ClientTimeline { client_id: id.clone(), dates }
        })
        .collect();
    timelines.sort_unstable_by(|a, b| a.client_id.cmp(&b.client_id));
    timelines
}

/// Counts reported after ingestion. Duplicate client-days are reported
/// separately because upstream exports differ on whether they aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub rows_read: u64,
    pub records: u64,
    pub diagnostics: u64,
    pub client_days: u64,
    pub duplicate_records: u64,
    pub clients: u64,
}

impl IngestSummary {
    pub fn new(parsed: &ParsedRecords, timelines: &[ClientTimeline]) -> Self {
        let client_days = timelines.iter().map(|t| t.len() as u64).sum();
        let records = parsed.records.len() as u64;
        IngestSummary {
            rows_read: parsed.rows_read,
            records,
            diagnostics: parsed.diagnostics.len() as u64,
            client_days,
            duplicate_records: records - client_days,
            clients: timelines.len() as u64,
        }
    }
}

/// External regime partitioning the observation period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Era {
    HousingReady,
    HousingFirst,
    Covid19,
}

impl Era {
    pub const ALL: [Era; 3] = [Era::HousingReady, Era::HousingFirst, Era::Covid19];

    pub fn as_str(self) -> &'static str {
        match self {
            Era::HousingReady => "housing-ready",
            Era::HousingFirst => "housing-first",
            Era::Covid19 => "covid19",
        }
    }

    /// Half-open `[start, end)` bounds; `None` is unbounded.
    pub fn bounds(self, config: &EraConfig) -> (Option<NaiveDate>, Option<NaiveDate>) {
        match self {
            Era::HousingReady => (None, Some(config.housing_ready_end)),
            Era::HousingFirst => (Some(config.housing_ready_end), Some(config.housing_first_end)),
            Era::Covid19 => (Some(config.housing_first_end), None),
        }
    }

    pub fn contains(self, date: NaiveDate, config: &EraConfig) -> bool {
        let (start, end) = self.bounds(config);
        start.is_none_or(|s| date >= s) && end.is_none_or(|e| date < e)
    }

    pub fn of(date: NaiveDate, config: &EraConfig) -> Era {
        if date < config.housing_ready_end {
            Era::HousingReady
        } else if date < config.housing_first_end {
            Era::HousingFirst
        } else {
            Era::Covid19
        }
    }
}

impl fmt::Display for Era {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Era {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "housing-ready" => Ok(Era::HousingReady),
            "housing-first" => Ok(Era::HousingFirst),
            "covid19" | "covid-19" => Ok(Era::Covid19),
            _ => Err(format!(
                "unknown era `{s}` (expected housing-ready, housing-first or covid19)"
            )),
        }
    }
}

/// Era boundary dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EraConfig {
    pub housing_ready_end: NaiveDate,
    pub housing_first_end: NaiveDate,
}

impl Default for EraConfig {
    fn default() -> Self {
        EraConfig {
            housing_ready_end: NaiveDate::from_ymd_opt(2017, 8, 1).unwrap(),
            housing_first_end: NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
        }
    }
}

impl EraConfig {
    pub fn new(housing_ready_end: NaiveDate, housing_first_end: NaiveDate) -> Result<Self, IngestError> {
        let config = EraConfig {
            housing_ready_end,
            housing_first_end,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.housing_ready_end >= self.housing_first_end {
            return Err(IngestError::EraOrder {
                housing_ready_end: self.housing_ready_end,
                housing_first_end: self.housing_first_end,
            });
        }
        Ok(())
    }
}

/// Timelines whose whole record (first and last stay) lies inside `era`.
pub fn select_era_cohort(timelines: &[ClientTimeline], era: Era, config: &EraConfig) -> Vec<ClientTimeline> {
    timelines
        .iter()
        .filter(|t| era.contains(t.first_date(), config) && era.contains(t.last_date(), config))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn rec(id: &str, date: NaiveDate) -> StayRecord {
        StayRecord::new(ClientId::new(id).unwrap(), date)
    }

    #[test]
    fn parses_single_row() {
        let parsed = parse_records("client_id,date\nc1,2015-03-02\n".as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(parsed.records, vec![rec("c1", d(2015, 3, 2))]);
        assert_eq!(parsed.rows_read, 1);
    }

    #[test]
    fn invalid_month_is_an_error_at_its_line() {
        let src = "client_id,date\nc0,2015-03-01\nc1,2015-13-02\n";
        match parse_records(src.as_bytes(), IngestMode::Strict) {
            Err(IngestError::Record { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected record error, got {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_skips_malformed_rows() {
        let src = "client_id,date\nc1,2015-03-02\nc2,2015-03-03\nc3,03/04/2015\nc4,2015-03-05\nc5,2015-03-06\n";
        let parsed = parse_records(src.as_bytes(), IngestMode::Lenient).unwrap();
        assert_eq!(parsed.records.len(), 4);
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].line, 4);
        assert_eq!(parsed.rows_read, 5);
    }

    #[test]
    fn row_order_is_preserved_and_extra_columns_ignored() {
        let src = "site,date,client_id\nA,2016-01-02,z\nB,2016-01-01,a\n";
        let parsed = parse_records(src.as_bytes(), IngestMode::Strict).unwrap();
        assert_eq!(parsed.records, vec![rec("z", d(2016, 1, 2)), rec("a", d(2016, 1, 1))]);
    }

    #[test]
    fn missing_column_is_fatal_in_both_modes() {
        for mode in [IngestMode::Strict, IngestMode::Lenient] {
            let err = parse_records("client,date\nc1,2015-03-02\n".as_bytes(), mode).unwrap_err();
            assert!(matches!(err, IngestError::MissingColumn("client_id")));
        }
    }

    #[test]
    fn rejects_loose_date_forms_and_empty_ids() {
        for bad in ["2015-3-02", "2015-03-2", "15-03-02", "2015/03/02", "2015-02-30", ""] {
            assert!(parse_iso_date(bad).is_err(), "{bad}");
        }
        let parsed = parse_records("client_id,date\n,2015-03-02\nc1\n".as_bytes(), IngestMode::Lenient).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.diagnostics.len(), 2);
    }

    #[test]
    fn empty_input_yields_nothing() {
        let parsed = parse_records("client_id,date\n".as_bytes(), IngestMode::Strict).unwrap();
        assert!(parsed.records.is_empty());
        assert!(build_timelines(&parsed.records).is_empty());
    }

    #[test]
    fn build_timelines_dedups_and_sorts() {
        let records = vec![rec("c1", d(2022, 4, 10)), rec("c1", d(2022, 4, 10)), rec("c1", d(2022, 4, 14)), rec("c0", d(2022, 1, 1))];
        let timelines = build_timelines(&records);
        assert_eq!(timelines.len(), 2);
        assert_eq!(timelines[0].client_id().as_str(), "c0");
        assert_eq!(timelines[1].dates(), &[d(2022, 4, 10), d(2022, 4, 14)]);
    }

    #[test]
    fn era_cohort_boundaries() {
        let config = EraConfig::default();
        let inside = ClientTimeline::new("a", vec![d(2015, 1, 1), d(2016, 1, 1)]).unwrap();
        let straddle = ClientTimeline::new("b", vec![d(2017, 7, 1), d(2017, 9, 1)]).unwrap();
        let on_edge = ClientTimeline::new("c", vec![d(2017, 8, 1)]).unwrap();
        let all = vec![inside.clone(), straddle, on_edge.clone()];
        assert_eq!(select_era_cohort(&all, Era::HousingReady, &config), vec![inside]);
        assert_eq!(select_era_cohort(&all, Era::HousingFirst, &config), vec![on_edge]);
        assert_eq!(Era::of(d(2017, 8, 1), &config), Era::HousingFirst);
        assert_eq!(Era::of(d(2020, 3, 1), &config), Era::Covid19);
        assert_eq!(Era::of(d(2020, 2, 29), &config), Era::HousingFirst);
    }

    #[test]
    fn era_config_must_be_ordered() {
        assert!(EraConfig::new(d(2020, 1, 1), d(2020, 1, 1)).is_err());
        assert!(EraConfig::new(d(2017, 8, 1), d(2020, 3, 1)).is_ok());
        assert_eq!("covid-19".parse::<Era>().unwrap(), Era::Covid19);
    }

    #[test]
    fn truncation_keeps_prefix() {
        let t = ClientTimeline::new("a", vec![d(2020, 1, 1), d(2020, 1, 5), d(2020, 2, 1)]).unwrap();
        assert_eq!(t.truncated(d(2020, 1, 5)).unwrap().len(), 2);
        assert!(t.truncated(d(2019, 12, 31)).is_none());
    }
}
