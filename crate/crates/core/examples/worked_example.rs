// A client who stayed on April 10, 11, 14 and 22, looked at on April 30.
//
//     cargo run --example worked_example

use chrono::NaiveDate;
use shelter_sam::{classify, compute_sam_metrics, ClientTimeline, SamConfig};

fn main() {
    let april = |day| NaiveDate::from_ymd_opt(2022, 4, day).unwrap();
    let timeline = ClientTimeline::new("client-1", vec![april(10), april(11), april(14), april(22)]).unwrap();
    let config = SamConfig {
        active_threshold_days: 10,
        ..SamConfig::default()
    };

    let m = compute_sam_metrics(&timeline, april(30), &config).unwrap();
    println!("shelter duration:     {} days", m.duration_days);
    println!("stays in window:      {}", m.stays_in_window);
    println!("in-shelter percent:   {:.1}%", m.in_shelter_percent);
    println!("days since last stay: {}", m.days_since_last_stay);
    println!("active (< {} days):   {}", config.active_threshold_days, m.active);
    println!("label at alpha {}:    {}", config.alpha_percent, classify(&m, &config));

    assert_eq!(m.duration_days, 20);
    assert_eq!(m.in_shelter_percent, 20.0);
    assert!(m.active);
}
