//! Group relative policy optimization on an enumerable toy environment.
//!
//! A group of `K` action sequences is drawn from the frozen old policy, each
//! sequence is turned into a chain and scored with the composite reward,
//! and rewards are standardized within the group. The surrogate
//! `(1/K)·Σ ρ_i·Â_i` with `ρ_i = π_θ(y_i)/π_old(y_i)` is maximized by
//! gradient ascent, optionally with a KL penalty or an entropy bonus.

mod advantage;
mod env;
mod policy;
mod train;

pub use advantage::{group_advantages, group_advantages_with, group_std, importance_ratio, StdMode, MAX_LOG_RATIO};
pub use env::{Derivation, EnvDescriptor, Fragment, StepDescriptor, SyntheticEnv, MAX_OUTCOMES};
pub use policy::ToyPolicy;
pub use train::{
    enumerate_expected_reward, enumerate_expected_reward_with_limit, expected_reward_from_table, grpo_objective,
    policy_gradient, sample_group, sample_group_with_rng, AdvantageOptions, Group, GroupSample, KlMode,
    Regularizer, TraceRecord, TrainConfig, TrainTrace, ENUMERATION_LIMIT, train,
};

use thiserror::Error;

use crate::reward::RewardError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("GroupTooSmall: groups need at least 2 samples, got {0}")]
    GroupTooSmall(usize),
    #[error("Overflow: log importance ratio {exponent} exceeds {MAX_LOG_RATIO}")]
    Overflow { exponent: f64 },
    #[error("SpaceTooLarge: {size} outcomes exceed the enumeration limit {limit}")]
    SpaceTooLarge { size: usize, limit: usize },
    #[error("ShapeMismatch: expected {expected} parameters, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("InvalidEnv: {0}")]
    Env(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

impl GrpoError {
    pub fn name(&self) -> &'static str {
        match self {
            GrpoError::GroupTooSmall(_) => "GroupTooSmall",
            GrpoError::Overflow { .. } => "Overflow",
            GrpoError::SpaceTooLarge { .. } => "SpaceTooLarge",
            GrpoError::ShapeMismatch { .. } => "ShapeMismatch",
            GrpoError::Env(_) => "InvalidEnv",
            GrpoError::InvalidConfig(_) => "InvalidConfig",
            GrpoError::Reward(e) => e.name(),
        }
    }
}
