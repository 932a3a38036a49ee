// Segment a client's stays into episodes: a gap of at least `gap_days`
// between consecutive stays starts a new one.
//
//     cargo run --example episodes

use chrono::{Days, NaiveDate};
use shelter_sam::{count_episodes, ClientTimeline};

fn main() {
    let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    // three bursts of nightly stays separated by 29 and 45 empty days
    let offsets = (0..10).chain(39..50).chain(95..100);
    let dates = offsets.map(|d| start + Days::new(d)).collect();
    let timeline = ClientTimeline::new("bursty", dates).unwrap();

    for gap in [1, 7, 30, 31, 60] {
        let s = count_episodes(&timeline, gap);
        println!("gap {gap:>2} days: {} stays in {} episodes", s.total_stays, s.total_episodes);
    }
}
