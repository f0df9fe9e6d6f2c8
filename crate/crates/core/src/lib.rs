//! Age-of-information analysis for large-scale slotted wireless networks.
//!
//! Transmitter–receiver pairs are dropped as a Poisson bipolar network, each
//! transmitter runs an unbounded FCFS or LCFS-PR queue fed by Bernoulli
//! updates and contends for the channel with ALOHA. The crate offers two
//! independent views of the same system:
//!
//! * [`sim`]: a slot-level Monte Carlo simulator with Rayleigh fading and
//!   SINR capture, producing per-link AoI, peak AoI, success probability and
//!   queue-growth statistics.
//! * [`analytic`]: numerical evaluation of the conditional Geo/Geo/1 AoI
//!   formulas, the SINR meta distribution fixed point (Beta moment matching
//!   or Gil-Pelaez inversion), the stability region and the network AoI.
//!
//! [`cli`] wires both into parameter sweeps and figure-ready CSV output.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod rng;
pub mod sim;

pub use config::{Discipline, NetworkConfig, NetworkParams, SimParams};
pub use error::{Error, Result};
pub use rng::{Purpose, RngContract, StreamId};
