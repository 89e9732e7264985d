//! Sparse planar array toolkit: coprime array geometries, difference-coarray
//! analysis, coarray-augmented 2-D MUSIC direction finding, Monte-Carlo RMSE
//! benchmarking and convex beam-pattern synthesis.
//!
//! The crate is organised around a small pipeline:
//!
//! 1. [`geometry`] builds sensor position sets on the integer lattice
//!    (1-D coprime arrays, the rectangular coprime planar array, and the
//!    CPA/GCPA baselines).
//! 2. [`coarray`] computes the difference coarray of an array: lags, the
//!    weight (redundancy) function, holes and the contiguous lag range.
//! 3. [`signal`] synthesises far-field narrowband snapshots and sample
//!    covariance matrices.
//! 4. [`doa`] averages the covariance over coarray lags, fills a Hermitian
//!    block-Toeplitz virtual covariance and runs 2-D MUSIC over an
//!    azimuth/elevation or normalized-DOA grid.
//! 5. [`montecarlo`] sweeps SNR or snapshot count across geometries and
//!    aggregates RMSE with optimal estimate-to-truth assignment.
//! 6. [`beamform`] synthesises array weights under directivity, null and
//!    sidelobe constraints via a second-order cone program.
//!
//! All randomness is seeded (ChaCha12) and all parallel sections reduce in a
//! fixed order, so identical inputs produce identical outputs.

pub mod beamform;
pub mod coarray;
pub mod doa;
pub mod error;
pub mod formats;
pub mod geometry;
mod linalg;
pub mod montecarlo;
pub mod signal;

pub use error::{Error, Result};
pub use geometry::{ArrayDesign, CoprimePair, SensorArray};
