//! Mean estimation for heavy-tailed distributions that only satisfy a
//! `(1 + alpha)` weak-moment bound.
//!
//! The estimator prunes far-away points around a coarse initial estimate,
//! averages the survivors in buckets, and then runs a descent whose distance
//! and direction estimates come from a semidefinite testing program over the
//! bucket means. The crate also ships the hard-instance distributions, an
//! empirical weak-moment certifier, and a Monte Carlo harness.

pub mod cli;
pub mod config;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod json;
pub mod linalg;
pub mod points;
pub mod rng;
pub mod sdp;

pub use config::{desk_profile, EstimatorConfig, Profile, SolverConfig};
pub use error::{Error, Result};
pub use estimator::{estimate_mean, estimate_mean_with_trace};
pub use points::{Estimate, Points, Sample};
pub use rng::make_rng;
