//! Ergodic capacity of user-centric virtual-cell mmWave networks.
//!
//! A typical UE at the origin is served cooperatively by its `K` nearest
//! access points, which form a homogeneous Poisson point process. Links are
//! LOS with probability `exp(-beta r)`, APs use sectored antennas and links
//! see Nakagami, Rayleigh or no small-scale fading.
//!
//! Two independent engines compute the ergodic capacity `E[log2(1 + SINR)]`:
//!
//! * [`analytic`] evaluates the Laplace-transform capacity expressions by
//!   numerical quadrature ([`quadrature`]);
//! * [`montecarlo`] simulates deployments, blockage, antenna gains and
//!   fading directly.
//!
//! [`sweep`] drives both over parameter grids and writes plot-ready CSV.

// `!(x > 0.0)` guards are deliberate: they also reject NaN. Quadrature
// constants keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod par;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod selftest;
pub mod stats;
pub mod sweep;

pub use analytic::{conditional_capacity, ergodic_capacity, Budget, CapacityEstimate, Method};
pub use error::{Error, Result};
pub use geometry::OrderedDistances;
pub use montecarlo::{estimate_capacity, SimMode};
pub use params::{FadingModel, Region, SystemParams};
