//! Pulse synthesis for single-shot three-qubit gates on a chain of coupled
//! four-level transmons.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`] builds the chain Hamiltonian and its excitation-truncated form.
//! * [`pulses`] holds the control-pulse parameterizations.
//! * [`propagation`] evolves the chain, projects onto the qubit subspace and
//!   scores a pulse against a target with local-Z phase compensation.
//! * [`gates`] provides the target unitaries and truth tables.
//! * [`noise`] adds amplitude and phase damping through Kraus channels.
//! * [`optimizer`] is the subspace-selective self-adaptive differential
//!   evolution driver.
//! * [`experiments`] wires everything into reproducible studies with CSV
//!   output.

pub mod error;
pub mod experiments;
pub mod fmt;
pub mod gates;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod optimizer;
pub mod propagation;
pub mod pulses;

pub use error::{Error, Result};
pub use gates::{make_target, GateName, GateTarget};
pub use model::TransmonChainSpec;
pub use optimizer::{run_sussade, SussadeConfig};
pub use propagation::{compensated_fidelity, fitness, propagate, GateObjective, Propagator};
pub use pulses::{PulseShape, PulseTable};
