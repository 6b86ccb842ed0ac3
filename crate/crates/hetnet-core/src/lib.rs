//! Power-minimizing downlink association for heterogeneous wireless
//! networks.
//!
//! The crate builds instances of a downlink network — three sectorized
//! macrocells, a ring of picocells, and a field of receivers, all placed
//! deterministically — and asks which base stations should serve which
//! receivers, and for what fraction of the time, so that every receiver's
//! demand is met at the lowest possible total power draw. The question is a
//! mixed-integer nonlinear program; it is attacked head-on with a biased
//! random-key genetic algorithm rather than through any relaxation.
//!
//! Module map:
//! - [`geometry`]: sunflower-spiral placement and sector balancing.
//! - [`radio`]: received power, SINR under spreading, capacity, decode rules.
//! - [`problem`]: instance assembly, constraint evaluation, penalties,
//!   scenario masks.
//! - [`brkga`]: the genetic solver.
//! - [`oracle`]: exhaustive reference solver for small instances.
//! - [`experiment`]: scenario-by-demand sweeps with per-run and aggregate
//!   statistics.

pub mod brkga;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod oracle;
pub mod problem;
pub mod radio;

pub use error::{Error, Result};
