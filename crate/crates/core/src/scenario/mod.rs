//! Discrete-time composition of tags, environment, channel and receiver.
//!
//! A [`Scenario`] is plain data (JSON, `schema: 1`). [`Engine`] steps it
//! through time; [`run`] adds the receiver and the ground-truth match.

pub mod config;
pub mod engine;
pub mod presets;
pub mod sweep;

pub use config::{
    CapConfig, ChannelConfig, Environment, Interaction, LuxSource, Placement, Scenario, SimMode, SwitchingConfig,
    TagConfig, TagMode, TransducerConfig,
};
pub use engine::{plan_captures, receive, run, step, Emission, Engine, RunOutput, SimTrace, TagStep, TracePoint};
pub use sweep::{sweep, with_parameter, SweepRow};
