//! Nonparametric spectral density estimation for irregularly sampled processes.
//!
//! The estimator is a weighted nonuniform Fourier sum
//! `S(xi) = |sum_j exp(-2 pi i xi x_j) alpha_j y_j|^2` whose weights `alpha`
//! are designed so that the sum `H_alpha(w) = sum_j exp(-2 pi i w x_j) alpha_j`
//! reproduces the Fourier transform `G` of a chosen window function over a
//! controlled band `[-Omega, Omega]`. The crate provides:
//!
//! * observation-location generation and CSV ingestion ([`sampling`]),
//! * Matern ground-truth models and Gaussian-process simulation ([`models`]),
//! * window construction: Kaiser, boxcar, prolate functions on unions of
//!   intervals and box/disk pairs, and GPSS weights ([`windows`]),
//! * nonuniform Fourier transforms, fast 1-d paths, and frequency-grid
//!   quadrature ([`nufourier`]),
//! * dense, low-rank, and preconditioned iterative weight solvers
//!   ([`weights`]),
//! * the spectral estimator, exact expectation and bias oracles, and
//!   baseline estimators ([`estimator`]).
//!
//! Sign convention: forward transforms use `exp(-2 pi i w x)` throughout;
//! adjoints use the positive sign.

pub mod error;
pub mod estimator;
pub mod models;
pub mod nufourier;
pub mod quad;
pub mod rng;
pub mod sampling;
pub mod special;
pub mod weights;
pub mod windows;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
