//! Scenario files, sweeps, CSV and trace output for the UAV network simulator.

pub mod config;
pub mod sweep;
pub mod trace;
