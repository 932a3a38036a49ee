// Fit the seeded K-means baseline on (total stays, total episodes) and
// name the clusters.
//
//     cargo run --example kmeans_baseline

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shelter_sam::ingest::ClientId;
use shelter_sam::{fit_kmeans, map_clusters_to_labels, ClusterConfig, FeatureRow};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    // (stays, episodes, spread, count): many short stayers, some repeat
    // visitors, a few long stayers
    for (group, (stays, episodes, spread, n)) in [(4.0, 1.0, 2.0, 400), (60.0, 6.0, 10.0, 80), (500.0, 2.0, 60.0, 20)]
        .into_iter()
        .enumerate()
    {
        let s = Normal::new(stays, spread).unwrap();
        let e = Normal::new(episodes, 1.0).unwrap();
        for i in 0..n {
            let id = ClientId::new(format!("g{group}-{i:03}")).unwrap();
            let stays: f64 = s.sample(&mut rng);
            let episodes: f64 = e.sample(&mut rng);
            rows.push(FeatureRow::new(id, stays.max(1.0).round(), episodes.max(1.0).round()));
        }
    }

    let config = ClusterConfig { seed: 7, ..ClusterConfig::default() };
    let model = map_clusters_to_labels(fit_kmeans(&rows, &config).unwrap()).unwrap();
    println!(
        "best of {} restarts: #{}, {} iterations, WCSS {:.3}",
        config.restarts, model.best_restart, model.iterations, model.wcss
    );
    for c in model.summary().clusters {
        println!(
            "cluster {} -> {:<12} n={:<4} mean stays {:>7.1}  mean episodes {:>5.2}",
            c.index,
            c.label.map(|l| l.to_string()).unwrap_or_default(),
            c.size,
            c.mean_stays,
            c.mean_episodes
        );
    }
}
