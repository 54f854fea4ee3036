//! Simulation and receiver toolkit for batteryless paper tags built around a
//! tunnel diode oscillator.
//!
//! The crate models a tag end to end: photodiode harvesting into
//! supercapacitors, timer-gated power switching, interaction transducers that
//! shift the oscillation frequency, a log-distance link budget, and an
//! SDR-style receiver that turns IQ samples into timestamped tag events.
//! [`scenario`] composes the pieces into deterministic, seeded runs and
//! [`repro`] compares model output against the published reference tables
//! shipped under `fixtures/paper_data/`.

pub mod analytics;
pub mod channel;
pub mod commands;
pub mod dsp;
pub mod error;
pub mod fixtures;
pub mod harvest;
pub mod interp;
pub mod repro;
pub mod rng;
pub mod scenario;
pub mod switching;
pub mod tdo;
pub mod transducer;

pub use error::{Error, Result};

/// Seed used whenever none is supplied.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;
