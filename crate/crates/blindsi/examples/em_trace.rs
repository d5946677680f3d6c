//! Watches the blind estimator climb: the per-iteration marginal likelihood
//! and scalar hyperparameters of one EM run. The likelihood column never
//! decreases; that monotonicity is the algorithm's core guarantee.

use blindsi::config::{ExperimentConfig, GroupSpec};
use blindsi::em::run_em;
use blindsi::harness::{derive_run_seed, draw_instance, SubSeeds};

fn main() {
    let config = ExperimentConfig {
        big_n: 100,
        n: 30,
        seed: 5,
        groups: vec![GroupSpec { p: 5, runs: 1 }],
        ..ExperimentConfig::default()
    };

    let basis = config.group_basis(5).expect("basis");
    let run_seed = derive_run_seed(config.seed, 5, 0);
    let inst = draw_instance(&config, &basis, run_seed).expect("instance");
    let est = run_em(
        &inst.y,
        basis.h(),
        &config.em_settings(SubSeeds::for_run(run_seed).em),
    )
    .expect("estimation");

    println!("  iter   log marginal      sigma2     decay");
    let trace = &est.trace;
    for (i, (theta, lml)) in trace.thetas.iter().zip(&trace.log_marginals).enumerate() {
        let last = i + 1 == trace.thetas.len();
        if i % 10 == 0 || last {
            println!(
                "  {i:>4}   {lml:>12.4}   {:>9.5}   {:>7.4}",
                theta.sigma2, theta.beta
            );
        }
    }
    let ascent = trace.final_log_marginal() - trace.log_marginals[0];
    println!(
        "\n{} iterations, total ascent {ascent:.3}, converged: {}",
        trace.iterations, trace.converged
    );
}
