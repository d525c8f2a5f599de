//! Reasoning chains grounded in structural causal models.
//!
//! A chain lists exogenous evidence statements `u1, u2, …` and endogenous
//! derivations `v1, v2, …`, each derivation naming the variables it reads.
//! The crate validates chains, serializes them, scores them with a composite
//! reward, trains toy policies with group-relative advantages and summarizes
//! corpora of chains.

pub mod analytics;
pub mod datapipe;
pub mod format;
pub mod grpo;
pub mod reward;
pub mod rng;
pub mod scm;
pub mod synth;

pub use format::{parse_chain, serialize_chain, ChainDocument, Format, FormatError};
pub use reward::{composite_reward, RewardBreakdown, RewardConfig, RewardError};
pub use scm::{
    build_graph, check_structural_validity, find_sink, CausalGraph, Label, ReasoningChain, ScmError, ValidityReport,
    VariableId,
};
