//! Outage analysis of RIS-assisted multiuser MIMO uplinks with zero-forcing
//! detection.
//!
//! The crate pairs a Monte Carlo link simulator with closed-form outage
//! expressions for four receivers that differ in the channel knowledge they
//! use: the direct link only, the RIS cascade only, both, or the direct link
//! combined with noncoherent collection of the RIS path.

// Negated float comparisons reject NaN on purpose; quadrature constants
// are kept at full published precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod channel;
pub mod cmatrix;
pub mod detectors;
pub mod error;
pub mod montecarlo;
pub mod specfun;
pub mod stats;

pub use analytic::{AnalyticOptions, JointMethod, OutagePoint};
pub use channel::{draw_channels, ChannelRealization, CltSurrogate, ScaleMode, SeedSpec, SystemConfig};
pub use cmatrix::{CMatrix, HouseholderQr, LinalgError};
pub use detectors::{threshold_from_rate, Scheme, SnrSample};
pub use error::{Error, Result};
pub use montecarlo::{run_sweep, OutageCurve, OutageEstimate, SweepOptions, SweepSpec, SweepVariable};
pub use specfun::{QuadratureSpec, SpecFunError};
