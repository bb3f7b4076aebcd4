//! Extremum seeking through one-phase Stefan actuation dynamics.
//!
//! The crate couples an immobilized-grid Stefan solver ([`plant`]) with a
//! motion-planned probing signal ([`dither`]) and a demodulating,
//! backstepping-compensated extremum-seeking loop ([`controller`]).
//! [`analysis`] holds the transforms and Lyapunov functionals of the
//! averaged closed loop, [`oracles`] the reference solutions, and
//! [`harness`] runs whole scenarios.

// `!(x > 0.0)` is used on purpose so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod checks;
pub mod config;
pub mod controller;
pub mod dither;
pub mod error;
pub mod harness;
pub mod jet;
pub mod oracles;
pub mod plant;
pub mod trace;

pub use config::{load_config, load_config_with_overrides, Scenario, SimConfig};
pub use error::{Error, Result};
pub use harness::{run_scenario, settle_metrics, ScenarioOutput, SettleMetrics};
