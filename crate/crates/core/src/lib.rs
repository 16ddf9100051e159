//! filterlab: robust adaptive filtering for errors-in-variables system
//! identification.
//!
//! The library is organized around the TACLDM filter ([`filter`]), which stays
//! stable and accurate when both the regressor and the desired signal are
//! noisy and when either is hit by impulsive outliers. Around it sit:
//!
//! * [`noise`] — generalized Gaussian, uniform, binary, and impulsive-mixture
//!   sources with exact variance calibration;
//! * [`theory`] — closed-form step-size stability bounds and steady-state
//!   misalignment prediction;
//! * [`baselines`] — LMS and a gradient-descent total-least-squares filter for
//!   head-to-head comparisons;
//! * [`sim`] — errors-in-variables data generation and deterministic,
//!   seed-reproducible Monte Carlo experiments;
//! * [`config`], [`output`], [`cli`] — the scenario-file format, CSV/manifest
//!   emission, and the `filterlab` command-line tool built from them.

pub mod baselines;
pub mod error;
pub mod filter;
pub mod noise;
pub mod sim;
pub mod theory;
pub mod wav;

pub use error::{Error, Result};
