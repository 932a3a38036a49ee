// Bin labeled clients by the quarter of their first stay and report the
// change in each group relative to the first quarter, plus each group's
// share of shelter stay-days.
//
//     cargo run --example quarterly_timeline

use shelter_sam::ingest::build_timelines;
use shelter_sam::synth::{demo_scenario, generate_population};
use shelter_sam::timeline::{default_origin, next_quarter};
use shelter_sam::*;

fn main() {
    // chronic arrivals stop during the Housing First era in this scenario
    let scenario = demo_scenario(2022);
    let population = generate_population(&scenario.scenario, &scenario.archetypes).unwrap();
    let timelines = build_timelines(&population.records);
    let labels = LabeledCohort::from_sam(&timelines, &SamConfig::default());

    let end = next_quarter(timelines.iter().map(|t| t.first_date()).max().unwrap());
    let series = occupancy_share(&timelines, &labels, default_origin(), end).unwrap();
    let change = percent_change(&series);

    println!("{:<10} {:>7} {:>7} {:>7}  {:>8} {:>8} {:>8}", "quarter", "trans%", "epis%", "chron%", "trans", "epis", "chron");
    for (i, bin) in series.bins.iter().enumerate() {
        let pc = |label: AccessLabel| change[label].as_ref().map(|v| format!("{:+.0}", v[i])).unwrap_or_default();
        let shares = bin.shares().unwrap_or_default();
        println!(
            "{:<10} {:>7} {:>7} {:>7}  {:>7.1}% {:>7.1}% {:>7.1}%",
            bin.start,
            pc(AccessLabel::Transitional),
            pc(AccessLabel::Episodic),
            pc(AccessLabel::Chronic),
            shares.transitional,
            shares.episodic,
            shares.chronic,
        );
    }
}
