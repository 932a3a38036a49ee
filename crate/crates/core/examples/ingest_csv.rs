// Parse stay records, collect diagnostics for bad rows, build per-client
// timelines and split them into era cohorts.
//
//     cargo run --example ingest_csv [records.csv]

use std::fs::File;

use shelter_sam::ingest::{build_timelines, parse_records, IngestMode, IngestSummary};
use shelter_sam::{select_era_cohort, Era, EraConfig};

const SAMPLE: &str = "\
client_id,date
a,2015-03-01
a,2015-03-01
a,2015-03-02
b,2018-01-15
b,2018/01/16
,2018-01-17
c,2020-05-01
c,2020-06-11
d,2016-12-30
d,2018-02-01
";

fn main() {
    run(std::env::args().nth(1));
}

fn run(path: Option<String>) {
    let parsed = match path {
        Some(path) => parse_records(File::open(path).unwrap(), IngestMode::Lenient),
        None => parse_records(SAMPLE.as_bytes(), IngestMode::Lenient),
    }
    .unwrap();

    for d in &parsed.diagnostics {
        println!("skipped: {d}");
    }
    let timelines = build_timelines(&parsed.records);
    let summary = IngestSummary::new(&parsed, &timelines);
    println!(
        "{} rows, {} records, {} client-days ({} duplicates), {} clients",
        summary.rows_read, summary.records, summary.client_days, summary.duplicate_records, summary.clients
    );

    // Clients whose whole record falls inside one era; d straddles two.
    let eras = EraConfig::default();
    for era in Era::ALL {
        let ids: Vec<_> = select_era_cohort(&timelines, era, &eras)
            .iter()
            .map(|t| t.client_id().to_string())
            .collect();
        println!("{era}: {ids:?}");
    }
}
