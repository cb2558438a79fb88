//! Near-field integrated sensing and communication (ISAC) simulation library.
//!
//! Models spherical-wavefront (near-field) and plane-wave (far-field)
//! propagation for extremely large antenna arrays and reproduces the
//! associated analyses: spatial degrees of freedom, multi-user channel
//! correlation, beamfocusing patterns, rate vs. Cramer-Rao trade-offs,
//! SINR-constrained power minimization, and 2D-MUSIC localization.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod power;
pub mod scenario;
pub mod sensing;

mod exec;

pub use error::{Error, Result};
