//! Known-input reference estimators the blind method is benchmarked
//! against: plain FIR least squares, and the kernel-based estimator with
//! the true input supplied (the same EM machinery with the input
//! coordinates frozen, so only the noise variance and decay are estimated).

use crate::em::{run_em_frozen, EmSettings};
use crate::error::{Error, Result};
use crate::linalg::{toeplitz_lift, Matrix, Vector};

/// Which reference estimator produced a result. The short names are the
/// column tags used in benchmark output: `NB-LS` for (non-blind) least
/// squares, `NB-KB` for the non-blind kernel-based estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LeastSquares,
    KernelKnownInput,
}

impl Method {
    pub fn short_name(&self) -> &'static str {
        match self {
            Method::LeastSquares => "NB-LS",
            Method::KernelKnownInput => "NB-KB",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub g_hat: Vector,
    pub method: Method,
    /// `(sigma2, beta)` when the method estimates hyperparameters.
    pub hyper: Option<(f64, f64)>,
}

/// FIR estimate `argmin ||y - T_n(u) g||` via singular value
/// decomposition; a rank-deficient lift falls back to the minimum-norm
/// solution instead of failing.
pub fn fir_least_squares(y: &Vector, u_true: &Vector, n: usize) -> Result<BaselineResult> {
    if y.len() != u_true.len() {
        return Err(Error::Dimension(format!(
            "output has {} samples but input has {}",
            y.len(),
            u_true.len()
        )));
    }
    let big_u = toeplitz_lift(u_true, n)?;
    let svd = big_u.svd(true, true);
    let sv_max = svd.singular_values.max();
    let cutoff = (1e-10 * sv_max).max(1e-300);
    let g_hat = svd
        .solve(y, cutoff)
        .map_err(|msg| Error::Conditioning(format!("least squares solve failed: {msg}")))?;
    Ok(BaselineResult {
        g_hat,
        method: Method::LeastSquares,
        hyper: None,
    })
}

/// Kernel-based estimate with the input known: the EM loop runs with the
/// single input coordinate pinned to 1 over the one-column basis `u_true`,
/// so only `(sigma2, beta)` are estimated and the returned impulse response
/// is the posterior mean at those hyperparameters.
pub fn kernel_known_input(
    y: &Vector,
    u_true: &Vector,
    n: usize,
    settings: &EmSettings,
) -> Result<BaselineResult> {
    if y.len() != u_true.len() {
        return Err(Error::Dimension(format!(
            "output has {} samples but input has {}",
            y.len(),
            u_true.len()
        )));
    }
    if settings.n != n {
        return Err(Error::Dimension(format!(
            "requested {n} impulse-response samples but settings carry {}",
            settings.n
        )));
    }
    let h = Matrix::from_column_slice(u_true.len(), 1, u_true.as_slice());
    let x = Vector::from_element(1, 1.0);
    let estimate = run_em_frozen(y, &h, &x, settings)?;
    Ok(BaselineResult {
        g_hat: estimate.posterior.mean_g.clone(),
        method: Method::KernelKnownInput,
        hyper: Some((estimate.theta.sigma2, estimate.theta.beta)),
    })
}
