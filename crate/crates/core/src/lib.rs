//! Coverage-constrained UAV trajectory planning over 3D city maps.
//!
//! The pipeline: a [`scenario::Scenario`] (city boxes, base stations, link
//! constants, mission endpoints) is turned into per-station sector coverage
//! maps ([`coverage`]); the [`planner`] searches a feasibility graph over
//! station projections and common-border samples, then refines the result on
//! a second graph restricted to the visited stations. [`eval`] scores
//! trajectories and runs seeded Monte-Carlo comparisons.

pub mod cli;
pub mod coverage;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod planner;
pub mod scenario;

pub use error::{Error, Result};
