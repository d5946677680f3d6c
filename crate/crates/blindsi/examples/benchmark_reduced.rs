//! A reduced run of the Monte Carlo benchmark (three input dimensions, four
//! runs each) producing the full artifact set of the `benchmark` command:
//! results.csv, summary.json, and one boxplot per group. Takes roughly half
//! a minute.

use blindsi::cli::cmd_benchmark;
use blindsi::config::{ExperimentConfig, GroupSpec};

fn main() {
    let config = ExperimentConfig {
        seed: 0,
        groups: [10, 20, 60]
            .into_iter()
            .map(|p| GroupSpec { p, runs: 4 })
            .collect(),
        output_dir: std::path::PathBuf::from("out/benchmark_reduced"),
        ..ExperimentConfig::default()
    };

    cmd_benchmark(&config, false).expect("benchmark");

    println!("\nartifacts:");
    let mut names: Vec<_> = std::fs::read_dir(&config.output_dir)
        .expect("output directory exists")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {}", config.output_dir.join(name).display());
    }
}
