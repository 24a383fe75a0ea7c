//! Per-edge randomness, cluster exploration, two-cluster events, ghost
//! weights, graph-to-graph coupling and the surgery construction.

pub mod coupling;
pub mod explore;
pub mod field;
pub mod surgery;
pub mod thresholds;
pub mod two_cluster;

pub use coupling::{coupled_pair_sample, CoupledPair};
pub use explore::{explore_cluster, ClusterSummary, ExplorationTrace, ExploreOutput, Explorer};
pub use field::{edge_state, edge_uniform, ghost_green, EdgeField, EdgeState, ForcedOpen, PrfField, SampleCtx};
pub use surgery::{geodesic, surgery_sweep, verify_surgery_chain, SurgeryOutcome, SurgeryTally};
pub use thresholds::{radius_thresholds, RadiusThresholds};
pub use two_cluster::{ghost_two_arm_weight, two_cluster_outcome, EventStatus, TwoClusterOutcome};
