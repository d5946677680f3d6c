//! Output-fit scoring, scale normalization, and Monte Carlo aggregation.
//!
//! Blind estimates are only defined up to the scaling `(alpha u, g / alpha)`,
//! so quality is measured on the noiseless output `T_n(u) g`, which that
//! ambiguity leaves untouched.

use crate::error::{Error, Result};
use crate::linalg::{toeplitz_lift, Vector};
use serde::{Deserialize, Serialize};

/// Output fitting score; 1 means the predicted noiseless output matches the
/// true one exactly, lower is worse (unbounded below).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitScore {
    pub value: f64,
}

/// `1 - ||U_hat g_hat - U g|| / ||U g - mean(U g)||` with `U = T_n(u)`.
pub fn fit_score(
    u_hat: &Vector,
    g_hat: &Vector,
    u_true: &Vector,
    g_true: &Vector,
    n: usize,
) -> Result<FitScore> {
    if u_hat.len() != u_true.len() {
        return Err(Error::Dimension(format!(
            "estimated input has length {} but true input has length {}",
            u_hat.len(),
            u_true.len()
        )));
    }
    if g_hat.len() != n || g_true.len() != n {
        return Err(Error::Dimension(format!(
            "impulse responses must have length {n}, got {} and {}",
            g_hat.len(),
            g_true.len()
        )));
    }
    let z_hat = toeplitz_lift(u_hat, n)? * g_hat;
    let z = toeplitz_lift(u_true, n)? * g_true;
    let mean = z.mean();
    let denom = z.map(|v| v - mean).norm();
    if denom == 0.0 {
        return Err(Error::Input(
            "true noiseless output is constant; fit score undefined".into(),
        ));
    }
    Ok(FitScore {
        value: 1.0 - (z_hat - z).norm() / denom,
    })
}

/// Canonical representative of the `(alpha u, g / alpha)` equivalence class.
#[derive(Debug, Clone)]
pub struct NormalizedPair {
    /// Unit-norm impulse response with its largest-magnitude entry positive.
    pub g_norm: Vector,
    /// Input rescaled by the inverse factor so the product is unchanged.
    pub u_norm: Vector,
    /// The applied scale: `g_norm = g / alpha`, `u_norm = alpha * u`.
    pub alpha: f64,
}

/// Rescales `(u, g)` so `g` has unit norm and a positive peak entry.
pub fn normalize_pair(u: &Vector, g: &Vector) -> Result<NormalizedPair> {
    let norm = g.norm();
    if norm == 0.0 {
        return Err(Error::Input(
            "cannot normalize an identically zero impulse response".into(),
        ));
    }
    let peak = g[g.iamax()];
    let alpha = if peak < 0.0 { -norm } else { norm };
    Ok(NormalizedPair {
        g_norm: g / alpha,
        u_norm: u * alpha,
        alpha,
    })
}

/// Five-number boxplot summary of a score batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest data point within 1.5 IQR below the first quartile.
    pub whisker_low: f64,
    /// Largest data point within 1.5 IQR above the third quartile.
    pub whisker_high: f64,
    pub count: usize,
}

fn midpoint_median(sorted: &[f64]) -> f64 {
    let len = sorted.len();
    if len % 2 == 1 {
        sorted[len / 2]
    } else {
        0.5 * (sorted[len / 2 - 1] + sorted[len / 2])
    }
}

/// Median, quartiles (medians of the lower and upper halves, middle element
/// excluded when the count is odd), and 1.5-IQR whiskers clamped to data.
pub fn aggregate(scores: &[f64]) -> Result<Summary> {
    if scores.is_empty() {
        return Err(Error::Input("cannot aggregate an empty score batch".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(
            "score batch contains non-finite values; filter failures first".into(),
        ));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let len = sorted.len();
    let median = midpoint_median(&sorted);
    let (q1, q3) = if len == 1 {
        (sorted[0], sorted[0])
    } else {
        (
            midpoint_median(&sorted[..len / 2]),
            midpoint_median(&sorted[len.div_ceil(2)..]),
        )
    };
    let iqr = q3 - q1;
    let low_fence = q1 - 1.5 * iqr;
    let high_fence = q3 + 1.5 * iqr;
    let whisker_low = sorted
        .iter()
        .cloned()
        .find(|&v| v >= low_fence)
        .unwrap_or(sorted[0]);
    let whisker_high = sorted
        .iter()
        .rev()
        .cloned()
        .find(|&v| v <= high_fence)
        .unwrap_or(sorted[len - 1]);
    Ok(Summary {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        count: len,
    })
}
