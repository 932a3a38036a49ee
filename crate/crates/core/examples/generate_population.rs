// Generate the bundled demo scenario to a directory, then run the
// `metrics` pipeline on the result.
//
//     cargo run --example generate_population [out-dir]

use std::path::{Path, PathBuf};

use shelter_sam::commands::{self, RunConfig};

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("shelter-sam-demo"));
    run(&out);
}

fn run(out: &Path) {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.toml");

    let config = RunConfig { output_dir: out.to_owned(), ..RunConfig::default() };
    let generated = commands::run_generate(&scenario, &config, None).unwrap();
    println!("seed {}: {} clients, {} stay records", generated.seed, generated.clients, generated.records);
    for (label, n) in generated.truth_counts.iter() {
        println!("  {label:<12} {n}");
    }

    let metrics_dir = out.join("metrics");
    let config = RunConfig { output_dir: metrics_dir.clone(), ..RunConfig::default() };
    let m = commands::run_metrics(&out.join(commands::RECORDS_CSV), &config, None).unwrap();
    println!(
        "metrics: {} clients, {} diagnostics -> {}",
        m.rows,
        m.diagnostics.len(),
        metrics_dir.join(commands::METRICS_CSV).display()
    );
}
