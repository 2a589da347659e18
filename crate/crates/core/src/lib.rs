//! Scheduling of wind-powered hydrogen production under a hydrogen purchase
//! agreement (HPA).
//!
//! The crate provides the plant model, an exact dispatch optimiser for daily
//! and annual horizons, a Mamdani fuzzy controller trained by particle swarm
//! optimisation against perfect-foresight benchmark runs, the convex-hull
//! envelope that bounds its cumulative deliveries, and the day-by-day
//! simulation loop that compares controllers by revenue.

pub mod bounding;
pub mod control;
pub mod dispatch;
pub mod error;
pub mod fuzzy;
pub mod plant;
pub mod pso;
pub mod scenario;
pub mod timeseries;

pub use error::{Error, Result};
