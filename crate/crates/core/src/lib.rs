//! Two-timescale age-of-information simulation and scheduling library for
//! LEO-satellite-backhauled vehicle platoons.
//!
//! The crate couples a fine AoI accounting tick (safety checks, virtual
//! queues, fading) with a coarse decision slot (association, power, handover)
//! and provides:
//!
//! - [`constellation`]: Walker-Delta propagation, elevation geometry,
//!   visibility sets and window prediction.
//! - [`channel`]: compound Doppler analytics, NTN path gain, Shadowed-Rician
//!   fading, per-tick SINR, and success probabilities.
//! - [`aoi`]: the two-timescale clock, tick-level AoI law, slot summaries,
//!   outage discretization, power ledger, and phase decomposition.
//! - [`safety`]: virtual-queue state machines and compliance reporting.
//! - [`analysis`]: closed-form oracles (spike envelope, refined handover
//!   increment, drift constant, ping-pong detection) plus a brute-force tick
//!   simulator used as the independent reference.
//! - [`scheduler`]: the drift-plus-penalty per-slot controller, proactive
//!   handover timing, and the round-robin / max-visible-time / greedy-RSS
//!   baselines.
//! - [`sim`]: the scenario configuration and the deterministic episode
//!   engine binding everything together.
//!
//! The crate is `no_std` (with `alloc`); all randomness flows through
//! explicit [`rng::Stream`] values, so identical configurations and seeds
//! reproduce identical results on every platform.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod aoi;
pub mod analysis;
pub mod channel;
pub mod constellation;
pub mod rng;
pub mod safety;
pub mod scheduler;
pub mod sim;

pub use aoi::{AoiState, OutageModel, SafetyThresholds, TimescaleConfig};
pub use channel::ChannelParams;
pub use constellation::{ConstellationConfig, SatelliteEphemeris, VehicleState};
pub use safety::VirtualQueueSet;
pub use scheduler::{Action, HandoverKind, PolicyConfig, PolicyKind};
pub use sim::{run_episode, RunResult, ScenarioConfig};
