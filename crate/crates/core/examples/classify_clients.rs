// Label-free view first: duration, in-shelter percentage and activity for
// each client on one date. Labels are derived afterwards, at each
// client's own evaluation horizon.
//
//     cargo run --example classify_clients

use chrono::{Days, NaiveDate};
use shelter_sam::{compute_sam_metrics, evaluate_client, ClientTimeline, SamConfig};

fn daily(id: &str, from: NaiveDate, every: u64, count: u64) -> ClientTimeline {
    let dates = (0..count).map(|i| from + Days::new(i * every)).collect();
    ClientTimeline::new(id, dates).unwrap()
}

fn main() {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let clients = [
        daily("nightly", start, 1, 200),
        daily("every-other-night", start, 2, 100),
        daily("one-week", start, 1, 7),
        daily("monthly", start, 29, 8),
    ];
    let config = SamConfig::default();
    let as_of = NaiveDate::from_ymd_opt(2019, 6, 30).unwrap();

    println!("as of {as_of}");
    println!("{:<18} {:>8} {:>6} {:>9} {:>7}", "client", "duration", "stays", "in-shelter", "active");
    for t in &clients {
        let m = compute_sam_metrics(t, as_of, &config).unwrap();
        println!(
            "{:<18} {:>8} {:>6} {:>8.1}% {:>7}",
            t.client_id(), m.duration_days, m.stays_in_window, m.in_shelter_percent, m.active
        );
    }

    println!("\nlabels {} days after first stay (alpha {}%)", config.evaluation_horizon_days, config.alpha_percent);
    for t in &clients {
        let (m, label) = evaluate_client(t, &config);
        println!("{:<18} {:>8.1}% -> {label}", t.client_id(), m.in_shelter_percent);
    }
}
