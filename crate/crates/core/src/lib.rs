//! Differentially private sliced Wasserstein distance.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the numerical
//! pieces: exact one-dimensional Wasserstein distances, the Monte-Carlo
//! sliced estimator and its Gaussian-smoothed private variant, high
//! probability bounds on the squared sensitivity of random projections,
//! a Rényi-DP accountant with noise calibration, and a particle flow that
//! uses the private distance as a loss.
//!
//! File formats, the thread pool and the command line live in the `dpswd`
//! companion crate.

#![no_std]
#![deny(rustdoc::broken_intra_doc_links)]

extern crate alloc;

pub mod accountant;
mod error;
pub mod exec;
pub mod flow;
pub mod matrix;
pub mod measures;
pub mod randomness;
pub mod sensitivity;
pub mod sliced;
pub mod wasserstein1d;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use matrix::Matrix;
pub use measures::{EmpiricalMeasure, Normalization};
pub use randomness::{ProjectionMatrix, Seed};
