// Label a Housing Ready cohort with SAM and with the K-means baseline,
// then compare: accuracy, per-label agreement, the alpha sweep and the
// summary statistics of each grouping.
//
//     cargo run --example compare_with_clustering

use chrono::NaiveDate;
use shelter_sam::episodes::episode_features;
use shelter_sam::evaluation::{agreement_by_label, default_alpha_grid, format_group_table};
use shelter_sam::ingest::build_timelines;
use shelter_sam::synth::{demo_scenario, generate_population};
use shelter_sam::*;

fn main() {
    let mut scenario = demo_scenario(11);
    scenario.scenario.start = NaiveDate::from_ymd_opt(2013, 7, 1).unwrap();
    scenario.scenario.end = NaiveDate::from_ymd_opt(2016, 7, 1).unwrap();
    scenario.scenario.arrivals_per_quarter = 150;
    let population = generate_population(&scenario.scenario, &scenario.archetypes).unwrap();
    let timelines = build_timelines(&population.records);
    let cohort = select_era_cohort(&timelines, Era::HousingReady, &EraConfig::default());
    println!("{} clients, {} in the Housing Ready cohort", timelines.len(), cohort.len());

    let features = episode_features(&cohort, DEFAULT_GAP_DAYS);
    let rows: Vec<FeatureRow> = features.iter().map(FeatureRow::from).collect();
    let config = ClusterConfig { restarts: 20, ..ClusterConfig::default() };
    let model = map_clusters_to_labels(fit_kmeans(&rows, &config).unwrap()).unwrap();
    let clusters = LabeledCohort::new(LabelSource::Cluster, model.labels());

    let sam_config = SamConfig::default();
    let sam = LabeledCohort::from_sam(&cohort, &sam_config);
    println!("accuracy at alpha {}: {:.2}%", sam_config.alpha_percent, 100.0 * accuracy(&clusters, &sam).unwrap());
    for (label, a) in agreement_by_label(&clusters, &sam).unwrap().iter() {
        println!("  {label:<12} cluster {:>4}  SAM {:>4}  both {:>4}", a.truth, a.predicted, a.both);
    }

    let sweep = sweep_alpha(&cohort, &clusters, &default_alpha_grid(), &sam_config).unwrap();
    let curve: Vec<String> = sweep
        .points
        .iter()
        .map(|p| format!("{}:{:.1}", p.alpha_percent, 100.0 * p.accuracy))
        .collect();
    println!("sweep {}", curve.join(" "));
    println!("best alpha {} ({:.2}%)\n", sweep.best.alpha_percent, 100.0 * sweep.best.accuracy);

    let by_cluster = group_stats(&clusters, &features).unwrap();
    let by_sam = group_stats(&sam, &features).unwrap();
    print!("{}", format_group_table(&[(LabelSource::Cluster, &by_cluster), (LabelSource::Sam, &by_sam)]));

    // the truth labels used by the generator, for reference
    let truth = LabeledCohort::new(
        LabelSource::Truth,
        cohort.iter().map(|t| (t.client_id().clone(), population.truth[t.client_id()])).collect(),
    );
    println!("\nSAM vs generator truth: {:.2}%", 100.0 * accuracy(&truth, &sam).unwrap());
}
