//! The blind estimator against its two known-input references on the same
//! instances: a kernel-based estimator that is told the true input, and
//! plain FIR least squares. Blindness typically costs a few points of fit;
//! least squares pays instead for skipping the smoothness prior.

use blindsi::config::{ExperimentConfig, GroupSpec};
use blindsi::harness::{run_one, summarize_finite};

fn main() {
    let runs = 5;
    let config = ExperimentConfig {
        seed: 9,
        groups: vec![GroupSpec { p: 10, runs }],
        ..ExperimentConfig::default()
    };
    let basis = config.group_basis(10).expect("basis");

    println!("  run     blind   least squares   known-input kernel");
    let rows: Vec<_> = (0..runs)
        .map(|run| {
            let row = run_one(&config, &basis, 10, run);
            println!(
                "  {:>3}   {:>7.4}   {:>13.4}   {:>18.4}",
                run, row.fit_bkb, row.fit_nbls, row.fit_nbkb
            );
            row
        })
        .collect();

    let median = |f: fn(&blindsi::harness::RunResult) -> f64| {
        summarize_finite(&rows.iter().map(f).collect::<Vec<_>>())
            .expect("all runs succeeded")
            .median
    };
    println!(
        "\nmedians: blind {:.4}, least squares {:.4}, known-input kernel {:.4}",
        median(|r| r.fit_bkb),
        median(|r| r.fit_nbls),
        median(|r| r.fit_nbkb)
    );
}
