//! One-dimensional quantum trajectories for dispersing Gaussian packets and
//! their two-slit superposition: analytic hydrodynamic fields (density, flux,
//! velocity, quantum potential), guidance-equation trajectory swarms,
//! detection-screen Monte Carlo, and fringe/channel analysis.

pub mod analysis;
pub mod config;
pub mod detection;
pub mod error;
pub mod fields;
pub mod output;
pub mod packet;
pub mod quadrature;
pub mod runner;
pub mod sampling;
pub mod superposition;
pub mod trajectory;

pub use config::{RunConfig, Scenario};
pub use error::{Error, Result};
pub use packet::PacketParams;
pub use superposition::SuperpositionConfig;
