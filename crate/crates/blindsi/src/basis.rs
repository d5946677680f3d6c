//! Constructors for the known input subspace. The unmeasured input is
//! `u = H x` for a known full-column-rank `H` (N x p) and unknown
//! coordinates `x`; this module builds `H` for the two structured families
//! used throughout (staircase signals with known switching instants, sums
//! of known-frequency sinusoids) plus arbitrary user-supplied matrices.
//!
//! Rank is checked eagerly at construction so downstream estimation can
//! assume validity.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Tolerance for the rank-revealing full-column-rank check.
const RANK_TOL: f64 = 1e-10;

/// How a basis was constructed, with enough metadata to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// Staircase input; holds the switching instants `T_1 < ... < T_p = N`
    /// (1-based sample counts marking the end of each constant block).
    PiecewiseConstant { switch_instants: Vec<usize> },
    /// Sum of sinusoids; holds the angular frequencies.
    Sinusoid { frequencies: Vec<f64> },
    /// Caller-supplied dense matrix.
    Custom,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            BasisKind::PiecewiseConstant { .. } => "piecewise-constant",
            BasisKind::Sinusoid { .. } => "sinusoid",
            BasisKind::Custom => "custom",
        }
    }
}

/// A validated input subspace basis.
#[derive(Debug, Clone)]
pub struct InputBasis {
    h: Matrix,
    kind: BasisKind,
}

impl InputBasis {
    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    /// Number of output samples spanned (rows of H).
    pub fn big_n(&self) -> usize {
        self.h.nrows()
    }

    /// Subspace dimension (columns of H).
    pub fn p(&self) -> usize {
        self.h.ncols()
    }

    /// The input signal for coordinates `x`.
    pub fn input(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.p() {
            return Err(Error::Dimension(format!(
                "basis has {} columns but got {} coordinates",
                self.p(),
                x.len()
            )));
        }
        Ok(&self.h * x)
    }
}

fn check_full_column_rank(h: &Matrix, what: &str) -> Result<()> {
    if h.ncols() == 0 || h.nrows() == 0 {
        return Err(Error::Input(format!("{what}: basis matrix is empty")));
    }
    if h.ncols() > h.nrows() {
        return Err(Error::Input(format!(
            "{what}: {} columns exceed {} rows, cannot be full column rank",
            h.ncols(),
            h.nrows()
        )));
    }
    let rank = h.clone().rank(RANK_TOL);
    if rank < h.ncols() {
        return Err(Error::Input(format!(
            "{what}: rank {} < {} columns (tolerance {RANK_TOL})",
            rank,
            h.ncols()
        )));
    }
    Ok(())
}

/// Block-diagonal all-ones basis for a staircase input. `switch_instants`
/// are the strictly increasing 1-based instants `T_1 < ... < T_p = big_n`;
/// block `j` covers samples `T_{j-1}..T_j` (exclusive upper, `T_0 = 0`).
pub fn piecewise_constant_basis(switch_instants: &[usize], big_n: usize) -> Result<InputBasis> {
    if switch_instants.is_empty() {
        return Err(Error::Input("need at least one switching instant".into()));
    }
    let mut prev = 0usize;
    for &t in switch_instants {
        if t <= prev {
            return Err(Error::Input(format!(
                "switching instants must be strictly increasing and start at 1 or later, \
                 got {t} after {prev}"
            )));
        }
        prev = t;
    }
    if prev != big_n {
        return Err(Error::Input(format!(
            "last switching instant must equal the sample count {big_n}, got {prev}"
        )));
    }
    let p = switch_instants.len();
    let mut h = Matrix::zeros(big_n, p);
    let mut start = 0usize;
    for (j, &t) in switch_instants.iter().enumerate() {
        for r in start..t {
            h[(r, j)] = 1.0;
        }
        start = t;
    }
    // Disjoint unit blocks are orthogonal, so the rank check cannot fail;
    // keep it anyway so every constructor shares the invariant.
    check_full_column_rank(&h, "piecewise-constant basis")?;
    Ok(InputBasis {
        h,
        kind: BasisKind::PiecewiseConstant {
            switch_instants: switch_instants.to_vec(),
        },
    })
}

/// Sinusoid dictionary: column `j` is `sin(t * w_j)` for `t = 1..=big_n`.
pub fn sinusoid_basis(frequencies: &[f64], big_n: usize) -> Result<InputBasis> {
    if frequencies.is_empty() {
        return Err(Error::Input("need at least one frequency".into()));
    }
    if frequencies.len() > big_n {
        return Err(Error::Input(format!(
            "{} frequencies exceed {} samples",
            frequencies.len(),
            big_n
        )));
    }
    let h = Matrix::from_fn(big_n, frequencies.len(), |t, j| {
        ((t + 1) as f64 * frequencies[j]).sin()
    });
    for (j, &w) in frequencies.iter().enumerate() {
        if h.column(j).amax() < RANK_TOL {
            return Err(Error::Input(format!(
                "frequency {w} produces an identically zero column"
            )));
        }
    }
    check_full_column_rank(&h, "sinusoid basis")?;
    Ok(InputBasis {
        h,
        kind: BasisKind::Sinusoid {
            frequencies: frequencies.to_vec(),
        },
    })
}

/// Wraps a caller-supplied matrix after the rank check.
pub fn custom_basis(h: Matrix) -> Result<InputBasis> {
    check_full_column_rank(&h, "custom basis")?;
    Ok(InputBasis {
        h,
        kind: BasisKind::Custom,
    })
}

/// Equally spaced switching instants `floor(j * big_n / p)` for `j = 1..=p`.
/// Strictly increasing whenever `p <= big_n`, with the last instant at
/// `big_n` exactly.
pub fn equally_spaced_instants(p: usize, big_n: usize) -> Result<Vec<usize>> {
    if p == 0 || p > big_n {
        return Err(Error::Input(format!(
            "cannot place {p} blocks over {big_n} samples"
        )));
    }
    Ok((1..=p).map(|j| j * big_n / p).collect())
}

/// Equally spaced frequencies `j * pi / (p + 1)` for `j = 1..=p`, all
/// strictly inside `(0, pi)` so no column degenerates.
pub fn equally_spaced_frequencies(p: usize) -> Vec<f64> {
    (1..=p)
        .map(|j| j as f64 * std::f64::consts::PI / (p + 1) as f64)
        .collect()
}
