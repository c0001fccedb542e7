//! Exact-enumeration emulation of quantum agnostic learning for decision trees.
//!
//! The crate pairs brute-force Boolean Fourier analysis with contract-level
//! emulations of amplitude amplification and estimation, and builds on them
//! the Goldreich–Levin prefix search, parity weak learners and agnostic
//! boosting by relabeling.

pub mod boolean;
pub mod boosting;
pub mod channel;
pub mod error;
pub mod gl;
pub mod harness;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod weak;

pub use boolean::{
    best_parity, l1_norm, parity_eval, prefix_weight, random_tree, wht, BooleanFunction,
    DecisionTree, FourierSpectrum, Prefix,
};
pub use boosting::{BoostOutcome, BoostTrace, CombinedHypothesis};
pub use channel::{LabelChannel, SampleCounts, WeightFunction};
pub use error::{Error, Result};
pub use gl::{GlOutcome, StronglyBiasedOracle};
pub use harness::{ExperimentConfig, RunRecord};
pub use quantum::{EstimateReport, FailureMode, QueryLedger};
pub use weak::{Hypothesis, WeakLearner, WeakLearnerResult};
