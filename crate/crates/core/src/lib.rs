//! Automatic energy saving (AES) model for wireless sensor networks.
//!
//! * [`detection`]: ROC-constrained threshold optimisation, decision fusion
//!   and the active/passive/sleep mode automaton.
//! * [`energy`]: per-mode consumption, network sums, link admission and the
//!   annulus model.
//! * [`integrator`]: energy-preserving quadrature-based time stepping.
//! * [`simulator`]: deterministic discrete-event simulation of a
//!   region-partitioned network against duty-cycle baselines.
//! * [`exec`]: sequential or rayon-backed execution of independent runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod energy;
pub mod exec;
pub mod integrator;
pub mod simulator;

#[cfg(any(test, feature = "oracles"))]
pub mod oracle;

pub use detection::{Mode, ModeDecision, RocModel, SampleCountDistribution, ThresholdSolution};
pub use energy::EnergyParams;
pub use exec::Execution;
pub use simulator::{BaselineKind, Protocol, ScenarioConfig, SimReport};
