//! Blind identification of SISO linear systems.
//!
//! The output of an unknown stable system is observed in noise while the
//! input is not measured; the only prior knowledge about the input is that it
//! lives in a known low-dimensional subspace, `u = H x`. The impulse response
//! is modelled as a zero-mean Gaussian process with a first-order stable
//! spline covariance, and the input coordinates, the noise variance and the
//! kernel decay are all estimated from the output alone by maximizing the
//! marginal likelihood with an EM scheme whose M-step is a pair of
//! closed-form updates plus a scalar grid search.
//!
//! The crate is organized around that pipeline:
//!
//! - [`linalg`]: Toeplitz lift, `vec`/selection operators, SPD solves.
//! - [`kernel`]: the stable spline (TC) kernel and its factorizations.
//! - [`posterior`]: Gaussian regression posterior and marginal likelihood.
//! - [`basis`]: constructors for the known input subspace.
//! - [`em`]: the EM hyperparameter engine.
//! - [`simulation`], [`baselines`], [`metrics`], [`harness`]: the Monte
//!   Carlo benchmark (random systems, reference estimators, FIT scoring).
//! - [`config`], [`io`], [`plot`], [`cli`]: the command-line front end.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `identify_piecewise`.

pub mod baselines;
pub mod basis;
pub mod cli;
pub mod config;
pub mod em;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod plot;
pub mod posterior;
pub mod simulation;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
