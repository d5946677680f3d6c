//! Gaussian-regression posterior of the impulse response given the output
//! and a fixed hyperparameter vector. With `U = toeplitz_lift(u, n)` the
//! model is `y = U g + v`, `g ~ N(0, K_beta)`, `v ~ N(0, sigma2 I)`, so the
//! posterior of `g` is Gaussian with
//!
//! ```text
//! P = (U'U / sigma2 + K_beta^{-1})^{-1},   C = P U' / sigma2,   g_hat = C y.
//! ```
//!
//! This n x n information form is the production path (n is much smaller
//! than N in the intended regime). The equivalent N x N joint-conditioning
//! form lives in the tests as an oracle.

use crate::error::{Error, Result};
use crate::kernel::KernelFactor;
use crate::linalg::{toeplitz_lift, CholeskyFactor, Matrix, Vector};

/// Full hyperparameter vector: input coordinates, noise variance, kernel
/// decay.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperVector {
    pub x: Vector,
    pub sigma2: f64,
    pub beta: f64,
}

impl HyperVector {
    pub fn new(x: Vector, sigma2: f64, beta: f64) -> Result<Self> {
        let theta = Self { x, sigma2, beta };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::Dimension(
                "hyperparameter vector needs at least one input coordinate".into(),
            ));
        }
        if self.sigma2.is_nan() || self.sigma2 <= 0.0 {
            return Err(Error::Domain(format!(
                "noise variance must be positive, got {}",
                self.sigma2
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Domain(format!(
                "kernel decay must lie in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Number of input coordinates.
    pub fn p(&self) -> usize {
        self.x.len()
    }

    /// Euclidean distance to another vector of the same shape, used as the
    /// EM convergence criterion.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut sq = (self.sigma2 - other.sigma2).powi(2) + (self.beta - other.beta).powi(2);
        sq += (&self.x - &other.x).norm_squared();
        sq.sqrt()
    }
}

/// Posterior mean, covariance, and the linear gain mapping output data to
/// the mean.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    /// Posterior mean of the impulse response, length n.
    pub mean_g: Vector,
    /// Posterior covariance, n x n, symmetric positive definite.
    pub covariance_p: Matrix,
    /// Gain with `mean_g = gain_c * y`, n x N.
    pub gain_c: Matrix,
}

impl PosteriorSummary {
    /// Second-moment matrix `P + g_hat g_hat'`, the quantity every M-step
    /// update consumes.
    pub fn second_moment(&self) -> Matrix {
        &self.covariance_p + &self.mean_g * self.mean_g.transpose()
    }

    pub fn n(&self) -> usize {
        self.mean_g.len()
    }
}

/// Posterior of the impulse response under the stable spline prior.
pub fn posterior(
    y: &Vector,
    u: &Vector,
    n: usize,
    sigma2: f64,
    beta: f64,
) -> Result<PosteriorSummary> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Domain(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let factor = KernelFactor::new(beta, n)?;
    posterior_with_prior_inverse(y, u, n, sigma2, factor.inverse())
}

/// Same computation with an arbitrary SPD prior covariance in place of the
/// stable spline kernel. Exists so degenerate priors (identity, diagonal)
/// are expressible in tests; production code always goes through
/// [`posterior`].
pub fn posterior_with_prior(
    y: &Vector,
    u: &Vector,
    n: usize,
    sigma2: f64,
    prior: &Matrix,
) -> Result<PosteriorSummary> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Domain(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if prior.nrows() != n || prior.ncols() != n {
        return Err(Error::Dimension(format!(
            "prior covariance must be {n}x{n}, got {}x{}",
            prior.nrows(),
            prior.ncols()
        )));
    }
    let chol = CholeskyFactor::new(prior)
        .map_err(|_| Error::Conditioning("prior covariance is not positive definite".into()))?;
    posterior_with_prior_inverse(y, u, n, sigma2, &chol.inverse())
}

fn posterior_with_prior_inverse(
    y: &Vector,
    u: &Vector,
    n: usize,
    sigma2: f64,
    prior_inverse: &Matrix,
) -> Result<PosteriorSummary> {
    if y.len() != u.len() {
        return Err(Error::Dimension(format!(
            "output length {} does not match input length {}",
            y.len(),
            u.len()
        )));
    }
    let big_u = toeplitz_lift(u, n)?;
    let chol = information_factor(&big_u, sigma2, prior_inverse)?;
    Ok(summary_from_factor(y, &big_u, sigma2, &chol))
}

/// Cholesky factor of the information matrix `U'U/sigma2 + K^{-1}`. Both
/// summands are symmetric by construction (U'U via tr_mul, the prior inverse
/// entrywise), so no explicit symmetrization is needed before factoring.
fn information_factor(
    big_u: &Matrix,
    sigma2: f64,
    prior_inverse: &Matrix,
) -> Result<CholeskyFactor> {
    let info = big_u.tr_mul(big_u) / sigma2 + prior_inverse;
    CholeskyFactor::new(&info).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::Conditioning(format!(
            "posterior information matrix failed to factor at pivot {pivot}"
        )),
        other => other,
    })
}

fn summary_from_factor(
    y: &Vector,
    big_u: &Matrix,
    sigma2: f64,
    chol: &CholeskyFactor,
) -> PosteriorSummary {
    let covariance_p = chol.inverse();
    let gain_c = &covariance_p * big_u.transpose() / sigma2;
    let mean_g = &gain_c * y;
    PosteriorSummary {
        mean_g,
        covariance_p,
        gain_c,
    }
}

/// Posterior and log marginal likelihood in one pass. The two share the
/// Toeplitz lift, the kernel factor, and the information-matrix Cholesky,
/// which the EM loop would otherwise compute twice per iteration.
pub(crate) fn posterior_and_log_marginal(
    y: &Vector,
    u: &Vector,
    n: usize,
    sigma2: f64,
    beta: f64,
) -> Result<(PosteriorSummary, f64)> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Domain(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if y.len() != u.len() {
        return Err(Error::Dimension(format!(
            "output length {} does not match input length {}",
            y.len(),
            u.len()
        )));
    }
    let big_n = y.len();
    let big_u = toeplitz_lift(u, n)?;
    let kernel = KernelFactor::new(beta, n)?;
    let chol = information_factor(&big_u, sigma2, kernel.inverse())?;
    let summary = summary_from_factor(y, &big_u, sigma2, &chol);
    let uty = big_u.tr_mul(y);
    let log_det = big_n as f64 * sigma2.ln() + kernel.log_det() + chol.log_det();
    let quad = y.norm_squared() / sigma2 - uty.dot(&chol.solve_vec(&uty)?) / (sigma2 * sigma2);
    let lml = -0.5 * (big_n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad);
    Ok((summary, lml))
}

/// Log density of the output under the marginal model
/// `y ~ N(0, U K_beta U' + sigma2 I)`.
///
/// Evaluated through the n x n information matrix rather than the N x N
/// output covariance: the determinant lemma gives
/// `logdet Sigma_y = N log sigma2 + logdet K + logdet(U'U/sigma2 + K^{-1})`
/// and the matrix inversion lemma gives
/// `y' Sigma_y^{-1} y = y'y/sigma2 - (U'y)' (U'U/sigma2 + K^{-1})^{-1} (U'y) / sigma2^2`.
/// This keeps every factorization at kernel size, which matters both for
/// speed (it runs once per EM iteration) and for robustness when the noise
/// variance is at its floor.
pub fn log_marginal_likelihood(
    y: &Vector,
    u: &Vector,
    n: usize,
    sigma2: f64,
    beta: f64,
) -> Result<f64> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::Domain(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if y.len() != u.len() {
        return Err(Error::Dimension(format!(
            "output length {} does not match input length {}",
            y.len(),
            u.len()
        )));
    }
    let big_n = y.len();
    let big_u = toeplitz_lift(u, n)?;
    let kernel = KernelFactor::new(beta, n)?;
    let info = big_u.tr_mul(&big_u) / sigma2 + kernel.inverse();
    let chol = CholeskyFactor::new(&info).map_err(|_| {
        Error::Conditioning("marginal information matrix is not positive definite".into())
    })?;
    let uty = big_u.tr_mul(y);
    let log_det = big_n as f64 * sigma2.ln() + kernel.log_det() + chol.log_det();
    let quad = y.norm_squared() / sigma2 - uty.dot(&chol.solve_vec(&uty)?) / (sigma2 * sigma2);
    Ok(-0.5 * (big_n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel;
    use crate::linalg::spd_solve;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vector {
        Vector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
    }

    /// N x N joint-conditioning form of the same posterior; the production
    /// path must agree with it.
    fn conditioning_oracle(
        y: &Vector,
        u: &Vector,
        n: usize,
        sigma2: f64,
        beta: f64,
    ) -> (Vector, Matrix) {
        let big_u = toeplitz_lift(u, n).unwrap();
        let k = build_kernel(beta, n).unwrap();
        let mut sigma_y = &big_u * &k * big_u.transpose();
        for i in 0..y.len() {
            sigma_y[(i, i)] += sigma2;
        }
        let sigma_y = (&sigma_y + sigma_y.transpose()) * 0.5;
        let ku_t = &k * big_u.transpose();
        // g_hat = K U' Sigma_y^{-1} y, P = K - K U' Sigma_y^{-1} U K
        let g_hat = &ku_t * crate::linalg::spd_solve_vec(&sigma_y, y).unwrap();
        let solved_uk = spd_solve(&sigma_y, &(&big_u * &k)).unwrap();
        let p = &k - &ku_t * solved_uk;
        (g_hat, p)
    }

    #[test]
    fn fused_path_matches_separate_calls_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = random_vector(&mut rng, 15);
        let u = random_vector(&mut rng, 15);
        let (summary, lml) = posterior_and_log_marginal(&y, &u, 6, 0.3, 0.7).unwrap();
        let separate = posterior(&y, &u, 6, 0.3, 0.7).unwrap();
        let lml_separate = log_marginal_likelihood(&y, &u, 6, 0.3, 0.7).unwrap();
        assert_eq!(summary.mean_g, separate.mean_g);
        assert_eq!(summary.covariance_p, separate.covariance_p);
        assert_eq!(summary.gain_c, separate.gain_c);
        assert_eq!(lml, lml_separate);
    }

    #[test]
    fn identity_prior_identity_lift_halves_the_data() {
        // u a unit impulse makes the lift the identity; with prior I and
        // sigma2 = 1 the posterior mean is y/2 and the covariance I/2.
        let n = 4;
        let mut u = Vector::zeros(n);
        u[0] = 1.0;
        let y = Vector::from_column_slice(&[1.0, -2.0, 3.0, 0.5]);
        let post = posterior_with_prior(&y, &u, n, 1.0, &Matrix::identity(n, n)).unwrap();
        assert!((&post.mean_g - &y * 0.5).amax() < 1e-12);
        assert!((&post.covariance_p - Matrix::identity(n, n) * 0.5).amax() < 1e-12);
    }

    #[test]
    fn matches_joint_conditioning_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (big_n, n) = (12, 4);
        let y = random_vector(&mut rng, big_n);
        let u = random_vector(&mut rng, big_n);
        let (sigma2, beta) = (0.3, 0.7);

        let post = posterior(&y, &u, n, sigma2, beta).unwrap();
        let (g_oracle, p_oracle) = conditioning_oracle(&y, &u, n, sigma2, beta);

        assert!((&post.mean_g - &g_oracle).amax() < 1e-8);
        assert!((&post.covariance_p - &p_oracle).amax() < 1e-8);
    }

    #[test]
    fn huge_noise_variance_shrinks_mean_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_vector(&mut rng, 20);
        let u = random_vector(&mut rng, 20);
        let post = posterior(&y, &u, 6, 1e12, 0.8).unwrap();
        assert!(post.mean_g.norm() <= 1e-6 * y.norm());
    }

    #[test]
    fn covariance_is_symmetric_and_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let y = random_vector(&mut rng, 15);
            let u = random_vector(&mut rng, 15);
            let post = posterior(&y, &u, 5, 0.1, 0.6).unwrap();
            let p = &post.covariance_p;
            assert!((p - p.transpose()).amax() < 1e-10);
            assert!(CholeskyFactor::new(p).is_ok());
        }
    }

    #[test]
    fn covariance_inverts_the_information_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (big_n, n) = (18, 6);
        let y = random_vector(&mut rng, big_n);
        let u = random_vector(&mut rng, big_n);
        let (sigma2, beta) = (0.5, 0.75);
        let post = posterior(&y, &u, n, sigma2, beta).unwrap();

        let big_u = toeplitz_lift(&u, n).unwrap();
        let info = big_u.tr_mul(&big_u) / sigma2 + KernelFactor::new(beta, n).unwrap().inverse();
        assert!((&post.covariance_p * info - Matrix::identity(n, n)).amax() < 1e-8);
    }

    #[test]
    fn mean_is_gain_times_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let y = random_vector(&mut rng, 10);
        let u = random_vector(&mut rng, 10);
        let post = posterior(&y, &u, 3, 0.2, 0.5).unwrap();
        assert!((&post.gain_c * &y - &post.mean_g).amax() < 1e-14);
    }

    #[test]
    fn more_noise_never_grows_the_prior_norm_of_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for trial in 0..8 {
            let y = random_vector(&mut rng, 14);
            let u = random_vector(&mut rng, 14);
            let beta = 0.65;
            let n = 4;
            let kinv = KernelFactor::new(beta, n).unwrap().inverse().clone();
            let norm = |sigma2: f64| {
                let g = posterior(&y, &u, n, sigma2, beta).unwrap().mean_g;
                g.dot(&(&kinv * &g))
            };
            let base = norm(0.05);
            let noisier = norm(0.5);
            assert!(
                noisier <= base + 1e-12,
                "trial {trial}: prior norm grew from {base} to {noisier}"
            );
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let y = Vector::zeros(5);
        let u = Vector::zeros(5);
        assert!(matches!(
            posterior(&y, &u, 2, 0.0, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            posterior(&y, &u, 2, 1.0, 1.5),
            Err(Error::Domain(_))
        ));
        let y3 = Vector::zeros(3);
        assert!(matches!(
            posterior(&y3, &u, 2, 1.0, 0.5),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn log_marginal_zero_input_zero_data() {
        let big_n = 7;
        let y = Vector::zeros(big_n);
        let u = Vector::zeros(big_n);
        let lml = log_marginal_likelihood(&y, &u, 3, 1.0, 0.5).unwrap();
        let expected = -(big_n as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln();
        assert!((lml - expected).abs() < 1e-12);
    }

    #[test]
    fn log_marginal_diagonal_case() {
        // u = 0 makes Sigma_y = sigma2 I; with sigma2 = 2, N = 2, y'y = 4:
        // -log 2pi - log 2 - 1.
        let y = Vector::from_column_slice(&[2.0, 0.0]);
        let u = Vector::zeros(2);
        let lml = log_marginal_likelihood(&y, &u, 2, 2.0, 0.5).unwrap();
        let expected = -(2.0 * std::f64::consts::PI).ln() - 2.0f64.ln() - 1.0;
        assert!((lml - expected).abs() < 1e-12);
    }

    #[test]
    fn log_marginal_matches_density_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (big_n, n) = (10, 4);
        let y = random_vector(&mut rng, big_n);
        let u = random_vector(&mut rng, big_n);
        let (sigma2, beta) = (0.4, 0.6);

        let lml = log_marginal_likelihood(&y, &u, n, sigma2, beta).unwrap();

        // oracle: eigendecomposition-based multivariate normal log density
        let big_u = toeplitz_lift(&u, n).unwrap();
        let k = build_kernel(beta, n).unwrap();
        let mut cov = &big_u * k * big_u.transpose();
        for i in 0..big_n {
            cov[(i, i)] += sigma2;
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(cov);
        let logdet: f64 = eig.eigenvalues.iter().map(|&e| e.ln()).sum();
        let rotated = eig.eigenvectors.transpose() * &y;
        let quad: f64 = rotated
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(r, &e)| r * r / e)
            .sum();
        let oracle = -0.5 * (big_n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad);
        assert!((lml - oracle).abs() < 1e-9);
    }

    #[test]
    fn hyper_vector_validation_and_distance() {
        let ok = HyperVector::new(Vector::from_column_slice(&[1.0, 2.0]), 0.5, 0.9);
        assert!(ok.is_ok());
        assert!(HyperVector::new(Vector::zeros(0), 0.5, 0.9).is_err());
        assert!(HyperVector::new(Vector::zeros(2), -1.0, 0.9).is_err());
        assert!(HyperVector::new(Vector::zeros(2), 1.0, 1.0).is_err());

        let a = HyperVector::new(Vector::from_column_slice(&[0.0, 0.0]), 1.0, 0.5).unwrap();
        let b = HyperVector::new(Vector::from_column_slice(&[3.0, 0.0]), 1.0, 0.5).unwrap();
        assert!((a.distance(&b) - 3.0).abs() < 1e-15);
        assert_eq!(a.distance(&a), 0.0);
    }

    proptest! {
        #[test]
        fn prop_information_and_conditioning_forms_agree(
            seed in 0u64..400,
            big_n in 6usize..14,
            n in 1usize..5,
            sigma2 in 0.05f64..2.0,
            beta in 0.1f64..0.9,
        ) {
            prop_assume!(n <= big_n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = random_vector(&mut rng, big_n);
            let u = random_vector(&mut rng, big_n);

            let post = posterior(&y, &u, n, sigma2, beta).unwrap();
            let (g_oracle, p_oracle) = conditioning_oracle(&y, &u, n, sigma2, beta);

            prop_assert!((&post.mean_g - &g_oracle).amax() < 1e-8);
            prop_assert!((&post.covariance_p - &p_oracle).amax() < 1e-8);
        }
    }
}
