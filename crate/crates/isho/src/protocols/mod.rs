//! Protocol execution: per-node state and the event-driven engine that runs
//! a scheme's signalling steps together with the background downlink stream.

pub mod engine;
pub mod nodes;

pub use engine::{run_scheme, run_scheme_with, SimError, SimOutcome};
pub use nodes::{StreamReport, TunnelState};
