//! Toolkit for six-qubit cluster-state experiments on two photons.
//!
//! The crate covers the full analysis chain for graph-state experiments that
//! measure stabilizer expectation values:
//!
//! - exact algebra of signed Pauli strings and local Clifford frames
//!   ([`pauli`]),
//! - graphs, graph-state generators, and full stabilizer groups ([`graph`]),
//! - dense simulation of up to 12 qubits with noise channels, partial trace,
//!   and seeded Born-rule sampling ([`sim`]),
//! - fidelity, entanglement witness, Bell expressions, exhaustive
//!   local-hidden-variable bounds, and element-of-reality prediction
//!   probabilities ([`bell`]),
//! - ingestion of measured expectation tables and raw count tables, the
//!   bundled reference dataset, and machine-readable reports ([`data`]).

#![allow(clippy::needless_range_loop)]

pub mod bell;
pub mod data;
pub mod error;
pub mod graph;
pub mod pauli;
pub mod sim;

#[cfg(test)]
pub(crate) mod testmat;

pub use error::{Error, Result};
