//! Exact ground truth: exhaustive enumeration on small finite graphs and
//! closed-form branching-process laws on regular trees.

pub mod events;
pub mod finite;
pub mod golden;
pub mod tree;

pub use events::{
    chained_inequality, exact_event, exact_surgery, verify_akn_identity, verify_insertion_tolerance, verify_lemma_form,
    verify_mtp, ChainedReport, ExactEvent, ExactResult, Gap, MtpSums, SurgeryExact, Transport,
};
pub use finite::{expectations, expectations_vec, Config, FiniteGraph, ENUMERATION_CAP};
pub use golden::{load_golden, run_golden, GoldenCheck, GoldenRecord, SuiteReport, DEFAULT_GOLDEN};
pub use tree::{theta_tree, tree_cluster_tail, tree_progeny_pmf, TreeTail};
