//! Distributed state estimation over directed sensor networks.
//!
//! Each sensor runs a local Kalman prediction and update, then fuses its
//! neighbors' estimates by covariance intersection. The fused pair
//! `(x̂_{k,i}, P_{k,i})` is consistent: `P_{k,i}` bounds the true error
//! covariance and is available to the node in real time. Fusion weights are
//! either the constant adjacency weights or adaptive weights that provably
//! shrink the bound.
//!
//! Also provided: the centralized Kalman filter and the networked optimal-gain
//! filter as baselines, observability and topology analysis, and a Monte Carlo
//! harness.

pub mod ci_weights;
pub mod error;
pub mod filters;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod observability;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod stats;
pub mod topology;

pub use error::{Error, Result};
