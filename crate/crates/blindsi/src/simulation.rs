//! Random system and trajectory generation for the Monte Carlo benchmark:
//! stable rational systems with randomly placed conjugate pole/zero pairs,
//! truncated impulse responses, subspace inputs, and output noise scaled to
//! a fixed signal-to-noise ratio.
//!
//! Everything here is a pure function of its seed.

use crate::basis::InputBasis;
use crate::error::{Error, Result};
use crate::linalg::{population_variance, toeplitz_lift, Matrix, Vector};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

/// How to draw a random system. Zeros and poles are placed as conjugate
/// pairs (random magnitude up to the cap, random phase in `(0, pi)`), which
/// keeps the expanded polynomial coefficients real, so both counts must be
/// even.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSystemSpec {
    pub n_zeros: usize,
    pub n_poles: usize,
    pub zero_mag_max: f64,
    pub pole_mag_max: f64,
    pub seed: u64,
}

impl Default for RandomSystemSpec {
    fn default() -> Self {
        Self {
            n_zeros: 20,
            n_poles: 20,
            zero_mag_max: 0.95,
            pole_mag_max: 0.92,
            seed: 0,
        }
    }
}

impl RandomSystemSpec {
    pub fn validate(&self) -> Result<()> {
        for (what, mag) in [("zero", self.zero_mag_max), ("pole", self.pole_mag_max)] {
            if !(0.0..1.0).contains(&mag) {
                return Err(Error::Input(format!(
                    "{what} magnitude cap must lie in [0, 1), got {mag}"
                )));
            }
        }
        if !self.n_zeros.is_multiple_of(2) || !self.n_poles.is_multiple_of(2) {
            return Err(Error::Input(format!(
                "zero/pole counts must be even for conjugate pairing, got {} and {}",
                self.n_zeros, self.n_poles
            )));
        }
        Ok(())
    }
}

/// Rational transfer function in the delay operator, coefficients in
/// ascending powers. The impulse response convention adds one sample of
/// pure delay on top, so the modeled system is strictly causal: `num = [1]`,
/// `den = [1]` is the unit-gain one-step delay.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Expands random conjugate root pairs into a monic real polynomial.
fn random_pair_polynomial(rng: &mut ChaCha8Rng, pairs: usize, mag_max: f64) -> Vec<f64> {
    let mut poly = vec![1.0];
    for _ in 0..pairs {
        let mag: f64 = rng.random_range(0.0..mag_max);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::PI);
        // (1 - m e^{i phi} q)(1 - m e^{-i phi} q) with q the delay operator
        let pair = [1.0, -2.0 * mag * phase.cos(), mag * mag];
        poly = convolve(&poly, &pair);
    }
    poly
}

/// Draws a stable system with the requested pole/zero counts. Zeros are
/// drawn before poles, so two specs sharing a seed and zero settings also
/// share their numerator.
pub fn random_system(spec: &RandomSystemSpec) -> Result<TransferFunction> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let num = random_pair_polynomial(&mut rng, spec.n_zeros / 2, spec.zero_mag_max);
    let den = random_pair_polynomial(&mut rng, spec.n_poles / 2, spec.pole_mag_max);
    Ok(TransferFunction { num, den })
}

/// Roots of the polynomial `c[0] + c[1] q + ... + c[d] q^d` read as a
/// z-domain characteristic polynomial: returns the roots of
/// `c[0] z^d + c[1] z^{d-1} + ... + c[d]`, i.e. the poles when `c` is a
/// denominator in the delay operator. Computed from the companion matrix.
pub fn characteristic_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    if coeffs.is_empty() || coeffs[0] == 0.0 {
        return Err(Error::Input(
            "polynomial needs a nonzero leading coefficient".into(),
        ));
    }
    let d = coeffs.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut companion = Matrix::zeros(d, d);
    for j in 0..d {
        companion[(0, j)] = -coeffs[j + 1] / coeffs[0];
    }
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    Ok(companion.complex_eigenvalues().iter().cloned().collect())
}

/// First `n` impulse-response samples by forward recursion of the
/// difference equation. With the strict-causality convention the returned
/// entry at index `t` is the response `t + 1` steps after the impulse.
pub fn impulse_response(tf: &TransferFunction, n: usize) -> Result<Vector> {
    if n == 0 {
        return Err(Error::Dimension(
            "impulse response length must be positive".into(),
        ));
    }
    if tf.den.is_empty() || tf.den[0] == 0.0 {
        return Err(Error::Input(
            "denominator needs a nonzero leading coefficient".into(),
        ));
    }
    for root in characteristic_roots(&tf.den)? {
        let modulus = root.norm();
        if modulus >= 1.0 {
            return Err(Error::Domain(format!(
                "denominator root with modulus {modulus} is not stable"
            )));
        }
    }
    let num: Vec<f64> = tf.num.iter().map(|c| c / tf.den[0]).collect();
    let den: Vec<f64> = tf.den.iter().map(|c| c / tf.den[0]).collect();
    let mut h = Vector::zeros(n);
    for t in 0..n {
        let mut v = if t < num.len() { num[t] } else { 0.0 };
        for k in 1..den.len().min(t + 1) {
            v -= den[k] * h[t - k];
        }
        h[t] = v;
    }
    Ok(h)
}

/// One Monte Carlo dataset: the (normalized) truncated impulse response,
/// the subspace input, the noisy output, and the exact noise variance used.
#[derive(Debug, Clone)]
pub struct SimulatedInstance {
    pub g_true: Vector,
    pub u_true: Vector,
    pub x_true: Vector,
    pub y: Vector,
    pub sigma2_true: f64,
    pub basis: InputBasis,
}

/// Builds a dataset from a system and input coordinates. The impulse
/// response is rescaled so its peak magnitude is 1 (the blind problem is
/// scale-ambiguous, so this costs nothing and makes fit scores comparable
/// across systems); the noise variance is the noiseless output variance
/// divided by `noise_ratio`.
pub fn simulate_instance(
    tf: &TransferFunction,
    basis: &InputBasis,
    x_true: &Vector,
    noise_ratio: f64,
    n: usize,
    seed: u64,
) -> Result<SimulatedInstance> {
    if noise_ratio.is_nan() || noise_ratio <= 0.0 {
        return Err(Error::Input(format!(
            "noise ratio must be positive, got {noise_ratio}"
        )));
    }
    let u_true = basis.input(x_true)?;
    let mut g_true = impulse_response(tf, n)?;
    let peak = g_true.amax();
    if peak == 0.0 {
        return Err(Error::Input(
            "impulse response is identically zero over the horizon".into(),
        ));
    }
    g_true /= peak;

    let z = toeplitz_lift(&u_true, n)? * &g_true;
    let var = population_variance(&z);
    if var <= 0.0 {
        return Err(Error::Input(
            "noiseless output has zero variance; noise scaling is undefined".into(),
        ));
    }
    let sigma2_true = var / noise_ratio;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma2_true.sqrt())
        .map_err(|e| Error::Input(format!("noise distribution: {e}")))?;
    let y = Vector::from_fn(z.len(), |i, _| z[i] + rng.sample::<f64, _>(normal));

    Ok(SimulatedInstance {
        g_true,
        u_true,
        x_true: x_true.clone(),
        y,
        sigma2_true,
        basis: basis.clone(),
    })
}
