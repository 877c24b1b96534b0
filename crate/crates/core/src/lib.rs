//! Evolved liquid state machines.
//!
//! A spiking reservoir ("liquid") of leaky integrate-and-fire neurons is wired
//! by a distance-dependent sparse rule, its connectivity is evolved to
//! maximize the rank of its spike-state matrix, and a readout layer learns
//! online with dopamine-gated BCM plasticity to solve small decision tasks.

pub mod agent;
pub mod config;
pub mod encoder;
pub mod env;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod plasticity;
pub mod rank;
pub mod seed;
pub mod snn;
pub mod textio;
pub mod topology;

pub use error::{Error, Result};
