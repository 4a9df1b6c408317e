//! Consumption-pattern anomaly detection for power overloading attacks on
//! smart-metering networks.
//!
//! The crate is organised as a pipeline:
//!
//! - [`ingest`] decodes raw half-hourly meter files and builds per-home (SH)
//!   and neighborhood (NBH) datasets with calendar attributes.
//! - [`models`] trains the two regression learners behind the detectors: a
//!   reduced-error-pruning regression tree and an M5-style model tree.
//! - [`attacks`] injects the four overloading attack classes into benign
//!   consumption series and labels every interval.
//! - [`detect`] runs the home-level and neighborhood-level residual-threshold
//!   detectors and fuses their alerts.
//! - [`harness`] generates synthetic neighborhoods, replays whole scenarios
//!   and scores them.

pub mod attacks;
pub mod detect;
pub mod harness;
pub mod ingest;
pub mod models;
mod rng;

pub use attacks::{AttackSpec, AttackType, LabeledSeries};
pub use detect::{AlertEvent, AlertKind, NbhDetector, ShDetector};
pub use ingest::{Dataset, FeatureVector, Level, MeterReading};
pub use models::{ModelKind, TreeModel};
