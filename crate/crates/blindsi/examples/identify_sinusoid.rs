//! Blind identification with a sinusoid input family: the input is a sum of
//! sinusoids at known frequencies whose amplitudes are unknown and estimated
//! together with the impulse response.

use blindsi::basis::sinusoid_basis;
use blindsi::em::{run_em, EmSettings};
use blindsi::metrics::{fit_score, normalize_pair};
use blindsi::simulation::{random_system, RandomSystemSpec};
use blindsi::Vector;

fn main() {
    let big_n = 200;
    let n = 50;
    let frequencies = [0.25, 0.55, 1.1, 1.9];

    let system = random_system(&RandomSystemSpec {
        n_poles: 4,
        n_zeros: 2,
        seed: 12,
        ..RandomSystemSpec::default()
    })
    .expect("random system");

    let basis = sinusoid_basis(&frequencies, big_n).expect("distinct frequencies");
    let x_true = Vector::from_column_slice(&[1.2, -0.4, 0.8, 0.3]);
    let inst = blindsi::simulation::simulate_instance(&system, &basis, &x_true, 10.0, n, 3)
        .expect("simulation");

    let mut settings = EmSettings::new(n, 4);
    settings.max_iters = 3000;
    let est = run_em(&inst.y, basis.h(), &settings).expect("estimation");

    let u_hat = basis.input(&est.theta.x).expect("coordinate count matches");
    let fit =
        fit_score(&u_hat, &est.posterior.mean_g, &inst.u_true, &inst.g_true, n).expect("scoring");
    println!(
        "{} iterations (converged: {}), output fit {:.4}",
        est.trace.iterations, est.trace.converged, fit.value
    );

    // amplitudes are identifiable only up to a common scale; report both
    // sides under the same normalization
    let est_pair = normalize_pair(&u_hat, &est.posterior.mean_g).expect("nonzero estimate");
    let true_pair = normalize_pair(&inst.u_true, &inst.g_true).expect("nonzero truth");
    println!("\n  frequency   true amplitude   estimated");
    for (j, w) in frequencies.iter().enumerate() {
        println!(
            "  {:>9.2}  {:>15.3}  {:>10.3}",
            w,
            true_pair.alpha * x_true[j],
            est_pair.alpha * est.theta.x[j]
        );
    }
}
