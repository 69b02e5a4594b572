//! Density estimation under local differential privacy with Sobolev IPM
//! losses: a dyadic block privacy channel, the private Fourier projection
//! estimator, a Goldenshluger–Lepski type choice of the truncation level,
//! bump-function test densities and a Monte Carlo harness for rate checks.

pub mod adaptive;
pub mod data;
pub mod error;
pub mod estimator;
pub mod fourier;
pub mod harness;
pub mod mechanism;
mod par;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod testbed;

pub use error::{Error, Result};
