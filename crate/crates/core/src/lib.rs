//! Simulation and analysis toolkit for undersea magnetic sensor networks.
//!
//! A surface target with a magnetic dipole signature is tracked by a fixed
//! seabed array of scalar or vector magnetometers reporting to a central
//! fusion node running an unscented Kalman filter. The crate provides:
//!
//! - point-dipole magnetostatics ([`dipole`]),
//! - sensor-array geometry and measurement synthesis ([`sensing`]),
//! - the target motion model and trajectory generators ([`dynamics`]),
//! - the centralized UKF recursion ([`ukf`]),
//! - Fisher-information / Cramér–Rao bound analysis ([`crlb`]),
//! - Monte Carlo tracking experiments and sensor-outage resilience
//!   studies ([`experiments`]),
//! - scenario configuration and canned scenario library ([`config`]),
//! - CSV/JSON emission of results ([`report`]).
//!
//! All randomness flows through seeded, per-trial counter-based streams so
//! every experiment is reproducible bit-for-bit for a fixed seed.

pub mod config;
pub mod crlb;
pub mod dipole;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod numerics;
pub mod report;
pub mod rng;
pub mod sensing;
pub mod ukf;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
