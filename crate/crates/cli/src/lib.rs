//! Scenario files, result export, experiment sweeps, and report rendering
//! for the platoon AoI simulator.

pub mod config;
pub mod export;
pub mod report;
pub mod sweep;
