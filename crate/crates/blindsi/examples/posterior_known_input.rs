//! Regularized impulse-response estimation with a known input: the Gaussian
//! posterior under the exponentially decaying smoothness prior, and how the
//! marginal likelihood ranks different decay rates.

use blindsi::basis::piecewise_constant_basis;
use blindsi::posterior::{log_marginal_likelihood, posterior};
use blindsi::simulation::{simulate_instance, TransferFunction};
use blindsi::Vector;

fn main() {
    let big_n = 150;
    let n = 40;
    let system = TransferFunction {
        num: vec![1.0, 0.4],
        den: vec![1.0, -1.3, 0.42], // poles 0.7 and 0.6
    };
    let instants: Vec<usize> = (1..=6).map(|j| j * big_n / 6).collect();
    let basis = piecewise_constant_basis(&instants, big_n).expect("valid instants");
    let x = Vector::from_column_slice(&[1.0, -0.7, 0.4, 1.3, -0.2, 0.9]);
    let inst = simulate_instance(&system, &basis, &x, 10.0, n, 8).expect("simulation");

    println!("  decay   log marginal   impulse response error");
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &beta in &[0.30, 0.50, 0.70, 0.85, 0.95, 0.99] {
        let post = posterior(&inst.y, &inst.u_true, n, inst.sigma2_true, beta).expect("posterior");
        let lml = log_marginal_likelihood(&inst.y, &inst.u_true, n, inst.sigma2_true, beta)
            .expect("evidence");
        let rel_err = (&post.mean_g - &inst.g_true).norm() / inst.g_true.norm();
        println!("  {beta:.2}   {lml:>12.3}   {rel_err:>22.4}");
        if lml > best.0 {
            best = (lml, beta);
        }
    }
    println!("\nevidence prefers decay {:.2}", best.1);

    // posterior uncertainty at the preferred decay: count how many true
    // coefficients fall inside the two-standard-deviation band
    let post = posterior(&inst.y, &inst.u_true, n, inst.sigma2_true, best.1).expect("posterior");
    let inside = (0..n)
        .filter(|&i| {
            let sd = post.covariance_p[(i, i)].sqrt();
            (inst.g_true[i] - post.mean_g[i]).abs() <= 2.0 * sd
        })
        .count();
    println!("two-sigma band covers {inside}/{n} true coefficients");
}
