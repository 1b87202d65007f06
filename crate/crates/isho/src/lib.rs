//! Inter-slice handover (ISHO) session continuation: an analytical
//! delay/cost engine and a deterministic discrete-event simulator built over
//! the same canonical message sequences.
//!
//! Four schemes are modeled: the standard release-and-reestablish procedure,
//! MIPv6-style continuation (return routability + binding update), GTPv1-U
//! tunnelling between inter-slice gateway UPFs, and a hybrid of the latter
//! two. The analytic side composes per-step delays and signalling costs in
//! closed form; the simulator executes the same sequences message by message
//! (with real GTP-U and mobility-header payloads where applicable) and must
//! reproduce the analytic delay and interval to the microsecond.

pub mod analytic;
pub mod config;
pub mod experiments;
pub mod protocols;
pub mod sequences;
pub mod simkernel;
pub mod types;
pub mod wire;
