//! Discrete-event simulation of a region-partitioned sensor network running
//! the AES mode automaton, plus duty-cycle baselines for comparison.

pub mod config;
pub mod engine;
pub mod environment;
pub mod report;
pub mod sensing;
pub mod topology;

use thiserror::Error;

use crate::detection::DetectionError;
use crate::energy::EnergyError;

pub use config::{BaselineKind, DetectionSettings, Protocol, ScenarioConfig};
pub use engine::run;
pub use environment::{Environment, EnvironmentField, IndoorZone};
pub use report::{
    compute_savings, run_campaign, Campaign, DecisionCounts, PowerStateTimes, SimReport, Stat,
    SummaryRow,
};
pub use sensing::{sense_and_decide, DetectionContext};
pub use topology::{
    elect_boundary, generate_topology, plan_next_hop, NextHop, Node, NodeId, Position, Region,
    Role, Topology,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("region {0} has no members")]
    EmptyRegion(usize),
    #[error("node {node} has no neighbour closer to the sink")]
    NoProgress { node: NodeId },
    #[error("baseline total energy must be positive to compute savings")]
    ZeroBaseline,
    #[error("a campaign needs at least one protocol and one seed")]
    EmptyCampaign,
}
