//! EM ascent on the marginal likelihood of the hyperparameter vector
//! `theta = [x', sigma2, beta]`.
//!
//! Each iteration alternates the posterior computation (E-step) with three
//! closed-form coordinate updates (M-step): a linear solve for the input
//! coordinates, a scalar formula for the noise variance, and a grid search
//! with golden-section refinement for the kernel decay. Every update
//! maximizes its block of the expected complete log-likelihood exactly, so
//! the marginal likelihood never decreases along the trace; the decay update
//! additionally keeps the previous value whenever the grid candidate would
//! not improve its block, which preserves ascent when the optimum falls
//! between grid points.
//!
//! The marginal likelihood is not concave in `theta`, so [`run_em`] performs
//! several independently seeded restarts and returns the one with the
//! highest final marginal likelihood.

use crate::error::{Error, Result};
use crate::kernel::{KernelFactor, BETA_MAX, BETA_MIN};
use crate::linalg::{population_variance, spd_solve_vec, toeplitz_lift, zero_pad, Matrix, Vector};
use crate::posterior::{posterior, posterior_and_log_marginal, HyperVector, PosteriorSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The noise-variance update never returns less than this, so a noiseless
/// dataset cannot drive the next E-step into a division by zero.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Knobs for the EM driver.
#[derive(Debug, Clone, PartialEq)]
pub struct EmSettings {
    /// Stop when the Euclidean step between successive theta vectors falls
    /// below this.
    pub conv_tol: f64,
    pub max_iters: usize,
    /// Number of uniform grid points for the decay search.
    pub beta_grid_size: usize,
    /// Impulse response length to estimate.
    pub n: usize,
    /// Independent random initializations; the best final marginal
    /// likelihood wins, ties broken by lower restart index.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EmSettings {
    fn default() -> Self {
        Self {
            conv_tol: 1e-3,
            max_iters: 300,
            beta_grid_size: 100,
            n: 50,
            restarts: 4,
            seed: 0,
        }
    }
}

impl EmSettings {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_tol.is_nan() || self.conv_tol <= 0.0 {
            return Err(Error::Input(format!(
                "convergence tolerance must be positive, got {}",
                self.conv_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Input("need at least one iteration".into()));
        }
        if self.beta_grid_size < 2 {
            return Err(Error::Input(format!(
                "decay grid needs at least two points, got {}",
                self.beta_grid_size
            )));
        }
        if self.n == 0 {
            return Err(Error::Input(
                "impulse response length must be positive".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(Error::Input("need at least one restart".into()));
        }
        Ok(())
    }
}

/// Every iterate of the winning restart, oldest first. `thetas[0]` is the
/// random initialization; `log_marginals[k]` is the marginal likelihood at
/// `thetas[k]`.
#[derive(Debug, Clone)]
pub struct EmTrace {
    pub thetas: Vec<HyperVector>,
    pub log_marginals: Vec<f64>,
    pub converged: bool,
    /// Number of completed M-step updates (`thetas.len() - 1`).
    pub iterations: usize,
}

impl EmTrace {
    pub fn final_log_marginal(&self) -> f64 {
        *self.log_marginals.last().expect("trace is never empty")
    }
}

/// Outcome of [`run_em`]: the selected hyperparameters, the posterior at
/// those hyperparameters (its mean is the impulse-response estimate), and
/// the iteration trace of the winning restart.
#[derive(Debug, Clone)]
pub struct EmEstimate {
    pub theta: HyperVector,
    pub posterior: PosteriorSummary,
    pub trace: EmTrace,
}

impl EmEstimate {
    pub fn final_log_marginal(&self) -> f64 {
        self.trace.final_log_marginal()
    }
}

/// Posterior of the impulse response at `u = H x`.
pub fn e_step(y: &Vector, h: &Matrix, theta: &HyperVector, n: usize) -> Result<PosteriorSummary> {
    theta.validate()?;
    if h.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "basis has {} rows but output has {} samples",
            h.nrows(),
            y.len()
        )));
    }
    if h.ncols() != theta.p() {
        return Err(Error::Dimension(format!(
            "basis has {} columns but theta carries {} input coordinates",
            h.ncols(),
            theta.p()
        )));
    }
    let u = h * &theta.x;
    posterior(y, &u, n, theta.sigma2, theta.beta)
}

/// The input-coordinate block of the expected complete log-likelihood is
/// the quadratic `-(1/2 sigma2)(x'Ax - 2b'x)`; this returns `(A, b)`.
///
/// `A = H' M H` where `M` is the N x N matrix with entries
/// `M[a][b] = sum_c S[c][c + a - b]` over valid indices, `S = P + g g'`.
/// That is the Kronecker/selection-matrix quadratic form written without
/// materializing either factor: `M` absorbs `R'(S (x) I_N) R` through
/// prefix sums along the diagonals of `S`, costing O(N n) time and O(N^2)
/// memory instead of O(N^2 n^2).
pub fn build_quadratic(
    post: &PosteriorSummary,
    h: &Matrix,
    y: &Vector,
    n: usize,
) -> Result<(Matrix, Vector)> {
    if post.n() != n {
        return Err(Error::Dimension(format!(
            "posterior is over {} coefficients, expected {n}",
            post.n()
        )));
    }
    let big_n = y.len();
    if h.nrows() != big_n {
        return Err(Error::Dimension(format!(
            "basis has {} rows but output has {big_n} samples",
            h.nrows()
        )));
    }
    if n > big_n {
        return Err(Error::Dimension(format!(
            "impulse response length {n} exceeds sample count {big_n}"
        )));
    }
    let s = post.second_moment();
    let m = assemble_middle(&s, big_n);
    let a = h.transpose() * &m * h;
    // M is symmetric by construction; make A exactly so despite the
    // unsymmetric rounding of the two-sided product.
    let a = (&a + a.transpose()) * 0.5;

    let gpad = zero_pad(&post.mean_g, big_n)?;
    let lift_g = toeplitz_lift(&gpad, big_n)?;
    let b = h.transpose() * (lift_g.transpose() * y);
    Ok((a, b))
}

/// `M[a][b] = sum_c S[c][c + (a - b)]` with the count of valid `c` terms
/// limited by both the kernel order and the sample horizon.
fn assemble_middle(s: &Matrix, big_n: usize) -> Matrix {
    let n = s.nrows();
    let mut m = Matrix::zeros(big_n, big_n);
    for d in 0..n {
        let diag_len = n - d;
        let mut psum = vec![0.0; diag_len + 1];
        for c in 0..diag_len {
            psum[c + 1] = psum[c] + s[(c, c + d)];
        }
        for col in 0..big_n {
            let row = col + d;
            if row >= big_n {
                break;
            }
            let count = diag_len.min(big_n - row);
            if count == 0 {
                continue;
            }
            m[(row, col)] = psum[count];
            if d > 0 {
                m[(col, row)] = psum[count];
            }
        }
    }
    m
}

/// Maximizer of the input-coordinate block: solve `A x = b`.
pub fn update_x(a: &Matrix, b: &Vector) -> Result<Vector> {
    spd_solve_vec(a, b).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::Conditioning(
            "input-coordinate quadratic form is degenerate; the basis does not \
             pin down the coordinates"
                .into(),
        ),
        other => other,
    })
}

/// Maximizer of the noise-variance block, with the freshly updated input in
/// both the residual and the trace term:
/// `(||y - U g||^2 + Tr[U P U']) / N`, floored at [`SIGMA2_FLOOR`].
pub fn update_sigma2(y: &Vector, u_new: &Vector, post: &PosteriorSummary, n: usize) -> Result<f64> {
    if post.n() != n {
        return Err(Error::Dimension(format!(
            "posterior is over {} coefficients, expected {n}",
            post.n()
        )));
    }
    if y.len() != u_new.len() {
        return Err(Error::Dimension(format!(
            "output has {} samples but input has {}",
            y.len(),
            u_new.len()
        )));
    }
    let big_u = toeplitz_lift(u_new, n)?;
    let resid = (y - &big_u * &post.mean_g).norm_squared();
    let trace_term = big_u.tr_mul(&big_u).component_mul(&post.covariance_p).sum();
    Ok(((resid + trace_term) / y.len() as f64).max(SIGMA2_FLOOR))
}

/// Kernel factorizations over a fixed uniform decay grid. The factors
/// depend only on `(grid_size, n)`, so the EM loop builds this once and
/// reuses it every iteration; a grid point whose factorization fails is
/// kept as absent rather than aborting.
#[derive(Debug, Clone)]
pub struct BetaGrid {
    points: Vec<(f64, Option<KernelFactor>)>,
}

impl BetaGrid {
    pub fn new(grid_size: usize, n: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::Input(format!(
                "decay grid needs at least two points, got {grid_size}"
            )));
        }
        if n == 0 {
            return Err(Error::Dimension("kernel order must be positive".into()));
        }
        let step = (BETA_MAX - BETA_MIN) / (grid_size - 1) as f64;
        let points = (0..grid_size)
            .map(|i| {
                let beta = BETA_MIN + step * i as f64;
                (beta, KernelFactor::new(beta, n).ok())
            })
            .collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `log det K_beta + Tr[K_beta^{-1} S]`, the quantity the decay update
/// minimizes (twice the negated decay block of the expected complete
/// log-likelihood, constants dropped).
fn kernel_fit_objective(beta: f64, s: &Matrix) -> Result<f64> {
    let f = KernelFactor::new(beta, s.nrows())?;
    Ok(f.log_det() + f.inv_trace(s)?)
}

fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        let (bx, bf) = if fc <= fd { (c, fc) } else { (d, fd) };
        if bf < best.1 {
            best = (bx, bf);
        }
    }
    best
}

/// Grid argmin of the kernel-fit objective followed by golden-section
/// refinement within the two neighboring cells. Returns `(beta, objective)`.
fn minimize_kernel_fit(s: &Matrix, grid: &BetaGrid) -> Result<(f64, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, (beta, factor)) in grid.points.iter().enumerate() {
        let Some(factor) = factor else { continue };
        let value = factor.log_det() + factor.inv_trace(s)?;
        if !value.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, _, v)| value < v) {
            best = Some((i, *beta, value));
        }
    }
    let Some((idx, grid_beta, grid_value)) = best else {
        return Err(Error::Conditioning(format!(
            "decay update failed: none of the {} grid points factorized",
            grid.len()
        )));
    };
    if idx == 0 || idx == grid.len() - 1 {
        // argmin at the domain edge: no interior bracket to refine
        return Ok((grid_beta, grid_value));
    }
    let lo = grid.points[idx - 1].0;
    let hi = grid.points[idx + 1].0;
    let (refined, refined_value) = golden_section_min(
        |b| kernel_fit_objective(b, s).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-6,
    );
    if refined_value < grid_value {
        Ok((refined, refined_value))
    } else {
        Ok((grid_beta, grid_value))
    }
}

/// Decay update: minimize the kernel-fit objective of the posterior second
/// moment over a fresh uniform grid of `grid_size` points.
pub fn update_beta(post: &PosteriorSummary, grid_size: usize) -> Result<f64> {
    let grid = BetaGrid::new(grid_size, post.n())?;
    let s = post.second_moment();
    minimize_kernel_fit(&s, &grid).map(|(beta, _)| beta)
}

/// Expected complete log-likelihood at `theta` given the posterior computed
/// at the previous iterate:
///
/// ```text
/// -(N/2) log sigma2 - [y'y + Tr(U'U S) - 2 y'U g] / (2 sigma2)
///   - (1/2) log det K_beta - (1/2) Tr[K_beta^{-1} S]
/// ```
///
/// with `U = toeplitz_lift(H x, n)` and `S = P + g g'`. First-class so the
/// M-step updates can be validated as argmax oracles against it.
pub fn q_function(
    theta: &HyperVector,
    post_k: &PosteriorSummary,
    y: &Vector,
    h: &Matrix,
    n: usize,
) -> Result<f64> {
    theta.validate()?;
    if post_k.n() != n {
        return Err(Error::Dimension(format!(
            "posterior is over {} coefficients, expected {n}",
            post_k.n()
        )));
    }
    if h.nrows() != y.len() || h.ncols() != theta.p() {
        return Err(Error::Dimension(format!(
            "basis is {}x{} but output has {} samples and theta {} coordinates",
            h.nrows(),
            h.ncols(),
            y.len(),
            theta.p()
        )));
    }
    let u = h * &theta.x;
    let big_u = toeplitz_lift(&u, n)?;
    let s = post_k.second_moment();
    let data_quad = y.norm_squared() + big_u.tr_mul(&big_u).component_mul(&s).sum()
        - 2.0 * y.dot(&(&big_u * &post_k.mean_g));
    let decay_fit = kernel_fit_objective(theta.beta, &s)?;
    let big_n = y.len() as f64;
    Ok(-0.5 * big_n * theta.sigma2.ln() - data_quad / (2.0 * theta.sigma2) - 0.5 * decay_fit)
}

/// Blind estimate: iterate E-step and M-step from random initializations
/// and keep the restart with the highest final marginal likelihood.
pub fn run_em(y: &Vector, h: &Matrix, settings: &EmSettings) -> Result<EmEstimate> {
    run_em_mode(y, h, settings, None)
}

/// Same loop with the input coordinates pinned to `x_fixed`: only the noise
/// variance and the decay are estimated. This is the known-input reference
/// estimator.
pub fn run_em_frozen(
    y: &Vector,
    h: &Matrix,
    x_fixed: &Vector,
    settings: &EmSettings,
) -> Result<EmEstimate> {
    if x_fixed.len() != h.ncols() {
        return Err(Error::Dimension(format!(
            "basis has {} columns but got {} fixed coordinates",
            h.ncols(),
            x_fixed.len()
        )));
    }
    run_em_mode(y, h, settings, Some(x_fixed))
}

fn run_em_mode(
    y: &Vector,
    h: &Matrix,
    settings: &EmSettings,
    frozen_x: Option<&Vector>,
) -> Result<EmEstimate> {
    settings.validate()?;
    let big_n = y.len();
    if h.nrows() != big_n {
        return Err(Error::Dimension(format!(
            "basis has {} rows but output has {big_n} samples",
            h.nrows()
        )));
    }
    if settings.n > big_n {
        return Err(Error::Input(format!(
            "cannot estimate {} impulse-response samples from {big_n} outputs",
            settings.n
        )));
    }
    if h.ncols() == 0 || h.clone().rank(1e-10) < h.ncols() {
        return Err(Error::Input(
            "basis matrix is rank deficient; the input coordinates are not identifiable".into(),
        ));
    }

    let grid = BetaGrid::new(settings.beta_grid_size, settings.n)?;
    let mut best: Option<EmEstimate> = None;
    let mut failures = Vec::new();
    for restart in 0..settings.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.wrapping_add(restart as u64));
        match run_single(y, h, settings, &grid, &mut rng, frozen_x) {
            Ok(estimate) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| estimate.final_log_marginal() > b.final_log_marginal());
                if better {
                    best = Some(estimate);
                }
            }
            Err(e) => failures.push(format!("restart {restart}: {e}")),
        }
    }
    best.ok_or(Error::Estimation(failures))
}

fn run_single(
    y: &Vector,
    h: &Matrix,
    settings: &EmSettings,
    grid: &BetaGrid,
    rng: &mut ChaCha8Rng,
    frozen_x: Option<&Vector>,
) -> Result<EmEstimate> {
    let n = settings.n;
    let big_n = y.len();

    let x0 = match frozen_x {
        Some(x) => x.clone(),
        None => {
            // coordinates on the output's RMS scale keep the first E-step
            // away from both the zero-input and huge-input degeneracies
            let scale = {
                let rms = y.norm() / (big_n as f64).sqrt();
                if rms > 0.0 {
                    rms
                } else {
                    1.0
                }
            };
            Vector::from_fn(h.ncols(), |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                z * scale
            })
        }
    };
    let beta0 = rng.random_range(0.5..0.95);
    let sigma2_0 = (population_variance(y) / 10.0).max(SIGMA2_FLOOR);
    let mut theta = HyperVector::new(x0, sigma2_0, beta0)?;

    let (mut post, lml0) =
        posterior_and_log_marginal(y, &(h * &theta.x), n, theta.sigma2, theta.beta)?;
    let mut thetas = vec![theta.clone()];
    let mut log_marginals = vec![lml0];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..settings.max_iters {
        let x_new = match frozen_x {
            Some(x) => x.clone(),
            None => {
                let (a, b) = build_quadratic(&post, h, y, n)?;
                update_x(&a, &b)?
            }
        };
        let u_new = h * &x_new;
        let sigma2_new = update_sigma2(y, &u_new, &post, n)?;

        let s = post.second_moment();
        let (beta_candidate, candidate_fit) = minimize_kernel_fit(&s, grid)?;
        // keep the previous decay when the candidate does not improve its
        // block; without this, an optimum between grid points could make
        // the likelihood dip
        let beta_new = match kernel_fit_objective(theta.beta, &s) {
            Ok(previous_fit) if previous_fit < candidate_fit => theta.beta,
            _ => beta_candidate,
        };

        let theta_new = HyperVector::new(x_new, sigma2_new, beta_new)?;
        let (post_new, lml_new) =
            posterior_and_log_marginal(y, &u_new, n, theta_new.sigma2, theta_new.beta)?;
        iterations += 1;

        let step = theta_new.distance(&theta);
        theta = theta_new;
        post = post_new;
        thetas.push(theta.clone());
        log_marginals.push(lml_new);
        if step < settings.conv_tol {
            converged = true;
            break;
        }
    }

    Ok(EmEstimate {
        theta,
        posterior: post,
        trace: EmTrace {
            thetas,
            log_marginals,
            converged,
            iterations,
        },
    })
}
