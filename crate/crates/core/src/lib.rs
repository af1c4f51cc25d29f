//! Radio model, priority schema, allocation, peering/failure control, QoS routing
//! and a deterministic discrete-event engine for UAV-assisted cellular networks.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, sweeps and the
//! command line live in the `uavsim` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod allocation;
pub mod config;
pub mod control;
mod error;
pub mod metrics;
pub mod priority;
pub mod radio;
pub mod routing;
pub mod sim;
pub mod topology;
pub mod trace;

pub use error::{Error, Result};
