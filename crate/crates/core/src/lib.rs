//! Simulation and hardware optimization for chains of processing-node
//! quantum repeaters connected by optical fiber.
//!
//! The layers, bottom up:
//! - [`quantum`]: two-qubit density matrices, noise channels, gates, readout.
//! - [`hardware`]: hardware parameters, baseline, strategies, genomes.
//! - [`link`]: heralded single-click and double-click link generation.
//! - [`protocols`]: entanglement swapping, EPL and DEJMPS purification.
//! - [`sim`]: discrete-event simulation of SWAP-ASAP and nested (BDCZ) chains.
//! - [`analytics`]: closed-form waiting times, fidelities and distance bounds.
//! - [`optimizer`]: hardware cost, penalty, genetic algorithm, hill climbing.

pub mod analytics;
pub mod error;
pub mod hardware;
pub mod link;
pub mod optimizer;
pub mod protocols;
pub mod quantum;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
