//! The first-order stable spline kernel (TC kernel): entry `(i, j)` is
//! `beta^max(i, j)` with 1-based indices. Realizations drawn from it are
//! smooth and decay exponentially, which is what makes it a good prior for
//! BIBO-stable impulse responses.
//!
//! The scale of the kernel is not identifiable from output data (it trades
//! off against the input scale), so it is pinned to 1 and only the decay
//! `beta` is a hyperparameter. `beta = 0` would make the matrix singular and
//! `beta = 1` makes it rank one, so the admissible domain here is the open
//! interval, and grid searches run over `[BETA_MIN, BETA_MAX]`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Fixed kernel scale; the input/output scale ambiguity makes it redundant.
pub const LAMBDA: f64 = 1.0;

/// Lower end of the admissible decay range used by grid searches.
pub const BETA_MIN: f64 = 1e-4;
/// Upper end of the admissible decay range used by grid searches.
pub const BETA_MAX: f64 = 1.0 - 1e-4;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!(
            "kernel decay must lie in the open interval (0, 1), got {beta}"
        )));
    }
    Ok(())
}

/// First-order stable spline kernel of order `n` with decay `beta`.
#[derive(Debug, Clone)]
pub struct StableSplineKernel {
    beta: f64,
    n: usize,
}

impl StableSplineKernel {
    pub fn new(beta: f64, n: usize) -> Result<Self> {
        check_beta(beta)?;
        if n == 0 {
            return Err(Error::Dimension("kernel order must be positive".into()));
        }
        Ok(Self { beta, n })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        LAMBDA
    }

    /// Dense `n x n` covariance matrix.
    pub fn matrix(&self) -> Matrix {
        let beta = self.beta;
        Matrix::from_fn(self.n, self.n, |i, j| {
            LAMBDA * beta.powi(i.max(j) as i32 + 1)
        })
    }

    /// Factored form carrying the log-determinant and the explicit inverse.
    pub fn factor(&self) -> Result<KernelFactor> {
        KernelFactor::new(self.beta, self.n)
    }
}

/// Builds the dense `n x n` stable spline kernel matrix.
pub fn build_kernel(beta: f64, n: usize) -> Result<Matrix> {
    Ok(StableSplineKernel::new(beta, n)?.matrix())
}

/// Factored form of `K_beta`: log-determinant plus explicit inverse. Both
/// have closed forms: reversing the index order turns `beta^max(i,j)` into a
/// min-type (Markov) kernel, so the precision matrix is tridiagonal and the
/// determinant telescopes to `beta^(n(n+1)/2) (1 - beta)^(n-1)`. This keeps
/// construction at O(n^2) and trace products at O(n), which matters because
/// the decay update evaluates many of these per EM iteration.
#[derive(Debug, Clone)]
pub struct KernelFactor {
    beta: f64,
    log_det: f64,
    inverse: Matrix,
    prec_diag: Vec<f64>,
    prec_off: Vec<f64>,
}

impl KernelFactor {
    pub fn new(beta: f64, n: usize) -> Result<Self> {
        check_beta(beta)?;
        if n == 0 {
            return Err(Error::Dimension("kernel order must be positive".into()));
        }
        let log_det = (n * (n + 1)) as f64 / 2.0 * beta.ln() + (n as f64 - 1.0) * (1.0 - beta).ln();
        let omb = 1.0 - beta;
        let mut prec_diag = vec![0.0; n];
        let mut prec_off = vec![0.0; n - 1];
        if n == 1 {
            prec_diag[0] = 1.0 / beta;
        } else {
            prec_diag[0] = 1.0 / (beta * omb);
            for (i, entry) in prec_diag.iter_mut().enumerate().take(n - 1).skip(1) {
                *entry = (1.0 + beta) / (beta.powi(i as i32 + 1) * omb);
            }
            prec_diag[n - 1] = 1.0 / beta.powi(n as i32) + 1.0 / (beta.powi(n as i32 - 1) * omb);
            for (i, entry) in prec_off.iter_mut().enumerate() {
                *entry = -1.0 / (beta.powi(i as i32 + 1) * omb);
            }
        }
        if !prec_diag.iter().all(|v| v.is_finite()) {
            return Err(Error::Conditioning(format!(
                "stable spline kernel is numerically singular at beta = {beta}, n = {n}"
            )));
        }
        let mut inverse = Matrix::zeros(n, n);
        for (i, &d) in prec_diag.iter().enumerate() {
            inverse[(i, i)] = d;
        }
        for (i, &o) in prec_off.iter().enumerate() {
            inverse[(i, i + 1)] = o;
            inverse[(i + 1, i)] = o;
        }
        Ok(Self {
            beta,
            log_det,
            inverse,
            prec_diag,
            prec_off,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    /// `Tr[K_beta^{-1} S]` for an `S` of matching size, using only the
    /// tridiagonal band of the precision matrix.
    pub fn inv_trace(&self, s: &Matrix) -> Result<f64> {
        let n = self.prec_diag.len();
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Dimension(format!(
                "inv_trace: kernel is {n}x{n} but S is {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let mut acc = 0.0;
        for (i, &d) in self.prec_diag.iter().enumerate() {
            acc += d * s[(i, i)];
        }
        for (i, &o) in self.prec_off.iter().enumerate() {
            acc += o * (s[(i, i + 1)] + s[(i + 1, i)]);
        }
        Ok(acc)
    }
}

/// Returns `(log det K_beta, Tr[K_beta^{-1} S])` through one factorization.
pub fn kernel_logdet_invtrace(beta: f64, s: &Matrix) -> Result<(f64, f64)> {
    if s.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "S must be square, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = 1.0f64.max(s.amax());
    for i in 0..s.nrows() {
        for j in i + 1..s.ncols() {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Dimension("S must be symmetric within 1e-10".into()));
            }
        }
    }
    let f = KernelFactor::new(beta, s.nrows())?;
    Ok((f.log_det(), f.inv_trace(s)?))
}
