//! Selection-and-influence cultural dynamics on type graphs.
//!
//! Population mass sits on the nodes ("types") of an influence graph. In each
//! step, members of type `u` pick an interaction partner among their
//! interaction neighbors (and their own type, weighted by `alpha`), and
//! switch to an influencing partner's type with probability `p`. The crate
//! simulates the resulting deterministic map, detects equilibria, classifies
//! their stability and monitors the quantities that govern convergence.

pub mod convergence;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod generators;
pub mod graph;
pub mod io;
pub mod model;
pub mod plot;
pub mod probe;
pub mod stability;

pub use convergence::{
    direction_change_log, flow_configuration, is_sink_3path, partial_sums, star_outward_count, Configuration,
    Direction, PartialSums,
};
pub use dynamics::{
    interaction_mass, net_flow, simulate, simulate_with, step_direct, step_flows, RunStatus, RunSummary, StopCriterion,
    Trajectory,
};
pub use equilibrium::{equilibrium_check, EquilibriumReport};
pub use error::{Error, Result};
pub use graph::{
    active_set, active_subgraph, is_bipartite, is_independent, is_locally_balanced, is_regular_uniform,
    min_pairwise_distance, ActiveSubgraph, BalancedPartition,
};
pub use model::{FlowField, Interaction, MassVector, ModelParams, TypeGraph, Variant};
pub use probe::{empirical_stability_probe, ProbeConfig, ProbeReport};
pub use stability::{
    classify_stability, classify_universal_stability, witness_locally_balanced, witness_not_3separated,
    PerturbationWitness, Rule, StabilityVerdict, Verdict,
};
