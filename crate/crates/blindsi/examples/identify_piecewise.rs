//! Blind identification end to end: the output of an unknown two-pole
//! system driven by an unmeasured staircase input is recorded in noise, and
//! both the impulse response and the input are recovered from the output
//! alone, up to the inherent scale ambiguity.

use blindsi::basis::piecewise_constant_basis;
use blindsi::em::{run_em, EmSettings};
use blindsi::metrics::{fit_score, normalize_pair};
use blindsi::simulation::{simulate_instance, TransferFunction};
use blindsi::Vector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let big_n = 200;
    let n = 50;

    // stable two-pole system (poles 0.85 and 0.60); unknown to the estimator
    let system = TransferFunction {
        num: vec![1.0],
        den: vec![1.0, -1.45, 0.51],
    };

    // the input is constant on ten equal blocks; the estimator knows the
    // block boundaries but not the levels
    let instants: Vec<usize> = (1..=10).map(|j| j * big_n / 10).collect();
    let basis = piecewise_constant_basis(&instants, big_n).expect("valid switching instants");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x_true = Vector::from_fn(basis.p(), |_, _| StandardNormal.sample(&mut rng));

    let inst = simulate_instance(&system, &basis, &x_true, 10.0, n, 2).expect("simulation");
    println!(
        "recorded {big_n} noisy output samples, noise variance {:.4}",
        inst.sigma2_true
    );

    let mut settings = EmSettings::new(n, 7);
    settings.max_iters = 3000;
    let est = run_em(&inst.y, basis.h(), &settings).expect("estimation");
    println!(
        "EM finished after {} iterations (converged: {}), log marginal {:.3}",
        est.trace.iterations,
        est.trace.converged,
        est.final_log_marginal()
    );
    println!(
        "noise variance estimate {:.4} (true {:.4}), kernel decay {:.3}",
        est.theta.sigma2, inst.sigma2_true, est.theta.beta
    );

    let u_hat = basis.input(&est.theta.x).expect("coordinate count matches");
    let fit =
        fit_score(&u_hat, &est.posterior.mean_g, &inst.u_true, &inst.g_true, n).expect("scoring");
    println!("output fit {:.4} (1 is perfect)", fit.value);

    // estimates are only defined up to (alpha u, g / alpha); normalize both
    // sides the same way before comparing levels directly
    let est_pair = normalize_pair(&u_hat, &est.posterior.mean_g).expect("nonzero estimate");
    let true_pair = normalize_pair(&inst.u_true, &inst.g_true).expect("nonzero truth");
    println!("\nstaircase levels (scale-normalized)");
    println!("  block    true   estimated");
    let mut start = 0;
    for (j, &t) in instants.iter().enumerate() {
        println!(
            "  {:>5}  {:>6.3}  {:>9.3}",
            j + 1,
            true_pair.u_norm[start],
            est_pair.u_norm[start]
        );
        start = t;
    }
}
