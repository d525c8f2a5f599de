use rand::Rng;
use serde::{Deserialize, Serialize};

use super::advantage::{group_advantages_with, importance_ratio, StdMode};
use super::env::SyntheticEnv;
use super::policy::ToyPolicy;
use super::GrpoError;
use crate::format::ChainDocument;
use crate::reward::{composite_reward, RewardConfig};
use crate::rng::{stream_rng, Stream};

/// Largest outcome space [`enumerate_expected_reward`] will walk.
pub const ENUMERATION_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlMode {
    /// Subtract `coeff · KL(π_θ ‖ π_old)`.
    #[default]
    KlPenalty,
    /// Add `coeff · H(π_θ)`.
    EntropyBonus,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub mode: KlMode,
    pub coeff: f64,
}

impl Regularizer {
    pub const OFF: Regularizer = Regularizer { mode: KlMode::Off, coeff: 0.0 };

    pub fn kl(coeff: f64) -> Self {
        Regularizer { mode: KlMode::KlPenalty, coeff }
    }

    pub fn entropy(coeff: f64) -> Self {
        Regularizer { mode: KlMode::EntropyBonus, coeff }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageOptions {
    pub epsilon: f64,
    pub std_mode: StdMode,
}

impl Default for AdvantageOptions {
    fn default() -> Self {
        AdvantageOptions { epsilon: 1e-8, std_mode: StdMode::Population }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub actions: Vec<usize>,
    pub sequence: ChainDocument,
    pub reward: f64,
    pub logp_new: f64,
    pub logp_old: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub prompt_id: String,
    pub samples: Vec<GroupSample>,
    pub epsilon: f64,
}

impl Group {
    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.reward).collect()
    }

    pub fn advantages(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.advantage).collect()
    }

    /// `(1/K)·Σ ρ_i·Â_i` from the stored log-probabilities.
    pub fn surrogate(&self) -> Result<f64, GrpoError> {
        if self.samples.len() < 2 {
            return Err(GrpoError::GroupTooSmall(self.samples.len()));
        }
        let mut total = 0.0;
        for s in &self.samples {
            total += importance_ratio(s.logp_new, s.logp_old)? * s.advantage;
        }
        Ok(total / self.samples.len() as f64)
    }

    /// Re-evaluates `logp_new` under `policy`.
    pub fn refresh(&mut self, policy: &ToyPolicy) {
        for s in &mut self.samples {
            s.logp_new = policy.log_prob(&s.actions);
        }
    }
}

/// Draws `k` sequences from `old_policy`, scores them, and normalizes
/// rewards into advantages. Log-probabilities are recorded under both
/// policies.
pub fn sample_group_with_rng<R: Rng + ?Sized>(
    env: &SyntheticEnv,
    policy: &ToyPolicy,
    old_policy: &ToyPolicy,
    k: usize,
    reward_cfg: &RewardConfig,
    options: &AdvantageOptions,
    rng: &mut R,
) -> Result<Group, GrpoError> {
    if k < 2 {
        return Err(GrpoError::GroupTooSmall(k));
    }
    if policy.action_counts() != env.action_counts() || old_policy.action_counts() != env.action_counts() {
        return Err(GrpoError::ShapeMismatch {
            expected: env.action_counts().iter().sum(),
            actual: policy.n_params(),
        });
    }
    let mut samples = Vec::with_capacity(k);
    for _ in 0..k {
        let actions = old_policy.sample(rng);
        let sequence = env.build(&actions);
        let reward = composite_reward(&sequence, env.gold_label(), reward_cfg)?.total;
        samples.push(GroupSample {
            logp_new: policy.log_prob(&actions),
            logp_old: old_policy.log_prob(&actions),
            actions,
            sequence,
            reward,
            advantage: 0.0,
        });
    }
    let rewards: Vec<f64> = samples.iter().map(|s| s.reward).collect();
    let advantages = group_advantages_with(&rewards, options.epsilon, options.std_mode)?;
    for (s, a) in samples.iter_mut().zip(advantages) {
        s.advantage = a;
    }
    Ok(Group { prompt_id: env.descriptor().claim.clone(), samples, epsilon: options.epsilon })
}

/// [`sample_group_with_rng`] on the sampler stream of `seed`, with default
/// advantage options.
pub fn sample_group(
    env: &SyntheticEnv,
    policy: &ToyPolicy,
    old_policy: &ToyPolicy,
    k: usize,
    reward_cfg: &RewardConfig,
    seed: u64,
) -> Result<Group, GrpoError> {
    let mut rng = stream_rng(seed, Stream::Sampler);
    sample_group_with_rng(env, policy, old_policy, k, reward_cfg, &AdvantageOptions::default(), &mut rng)
}

/// Surrogate objective at `policy`, with advantages and old log-probabilities
/// held fixed, plus the regularizer.
pub fn grpo_objective(
    group: &Group,
    policy: &ToyPolicy,
    old_policy: &ToyPolicy,
    reg: Regularizer,
) -> Result<f64, GrpoError> {
    if group.samples.len() < 2 {
        return Err(GrpoError::GroupTooSmall(group.samples.len()));
    }
    let k = group.samples.len() as f64;
    let mut value = 0.0;
    for s in &group.samples {
        value += importance_ratio(policy.log_prob(&s.actions), s.logp_old)? * s.advantage;
    }
    value /= k;
    Ok(match reg.mode {
        KlMode::KlPenalty => value - reg.coeff * policy.kl_divergence(old_policy)?,
        KlMode::EntropyBonus => value + reg.coeff * policy.entropy(),
        KlMode::Off => value,
    })
}

/// Analytic gradient of [`grpo_objective`] with respect to the policy logits.
///
/// `∂ρ_i/∂θ = ρ_i·∇log π_θ(y_i)`, so the surrogate term is
/// `(1/K)·Σ ρ_i·Â_i·∇log π_θ(y_i)`.
pub fn policy_gradient(
    group: &Group,
    policy: &ToyPolicy,
    old_policy: &ToyPolicy,
    reg: Regularizer,
) -> Result<Vec<f64>, GrpoError> {
    if group.samples.len() < 2 {
        return Err(GrpoError::GroupTooSmall(group.samples.len()));
    }
    let k = group.samples.len() as f64;
    let mut grad = vec![0.0; policy.n_params()];
    for s in &group.samples {
        if s.advantage == 0.0 {
            continue;
        }
        let weight = importance_ratio(policy.log_prob(&s.actions), s.logp_old)? * s.advantage / k;
        for (g, d) in grad.iter_mut().zip(policy.grad_log_prob(&s.actions)) {
            *g += weight * d;
        }
    }
    match reg.mode {
        KlMode::KlPenalty => {
            for (g, d) in grad.iter_mut().zip(policy.grad_kl_divergence(old_policy)?) {
                *g -= reg.coeff * d;
            }
        }
        KlMode::EntropyBonus => {
            for (g, d) in grad.iter_mut().zip(policy.grad_entropy()) {
                *g += reg.coeff * d;
            }
        }
        KlMode::Off => {}
    }
    Ok(grad)
}

/// `Σ_y π(y)·R(y)` over a precomputed reward table.
pub fn expected_reward_from_table(env: &SyntheticEnv, policy: &ToyPolicy, table: &[f64]) -> f64 {
    let step_log_probs: Vec<Vec<f64>> = (0..policy.n_steps()).map(|s| policy.step_log_probs(s)).collect();
    table
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let logp: f64 = env.decode(i).iter().enumerate().map(|(s, &a)| step_log_probs[s][a]).sum();
            logp.exp() * r
        })
        .sum()
}

pub fn enumerate_expected_reward_with_limit(
    env: &SyntheticEnv,
    policy: &ToyPolicy,
    reward_cfg: &RewardConfig,
    limit: usize,
) -> Result<f64, GrpoError> {
    if env.n_outcomes() > limit {
        return Err(GrpoError::SpaceTooLarge { size: env.n_outcomes(), limit });
    }
    if policy.action_counts() != env.action_counts() {
        return Err(GrpoError::ShapeMismatch {
            expected: env.action_counts().iter().sum(),
            actual: policy.n_params(),
        });
    }
    let table = env.reward_table(reward_cfg)?;
    Ok(expected_reward_from_table(env, policy, &table))
}

/// Exact expected reward by exhaustive enumeration of the outcome space.
pub fn enumerate_expected_reward(
    env: &SyntheticEnv,
    policy: &ToyPolicy,
    reward_cfg: &RewardConfig,
) -> Result<f64, GrpoError> {
    enumerate_expected_reward_with_limit(env, policy, reward_cfg, ENUMERATION_LIMIT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(rename = "K", alias = "k")]
    pub group_size: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub kl_coeff: f64,
    pub kl_mode: KlMode,
    pub seed: u64,
    pub epsilon: f64,
    pub std_mode: StdMode,
    /// Gradient steps per sampled group; the old policy and advantages stay
    /// fixed across them.
    pub inner_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            group_size: 8,
            learning_rate: 0.1,
            iterations: 2000,
            kl_coeff: 0.01,
            kl_mode: KlMode::KlPenalty,
            seed: 42,
            epsilon: 1e-8,
            std_mode: StdMode::Population,
            inner_steps: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::GroupTooSmall(self.group_size));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(GrpoError::InvalidConfig(format!("learning_rate must be finite and >= 0, got {}", self.learning_rate)));
        }
        if !(self.kl_coeff.is_finite() && self.kl_coeff >= 0.0) {
            return Err(GrpoError::InvalidConfig(format!("kl_coeff must be finite and >= 0, got {}", self.kl_coeff)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(GrpoError::InvalidConfig(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if self.inner_steps == 0 {
            return Err(GrpoError::InvalidConfig("inner_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn regularizer(&self) -> Regularizer {
        Regularizer { mode: self.kl_mode, coeff: self.kl_coeff }
    }
}

/// One line of the training trace. Values are measured after the
/// iteration's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub expected_reward: f64,
    pub objective: f64,
    pub kl: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub initial_expected_reward: f64,
    /// Best reward over all outcomes, i.e. the value of the best point-mass policy.
    pub optimal_reward: f64,
    pub final_policy: ToyPolicy,
}

impl TrainTrace {
    pub fn final_expected_reward(&self) -> f64 {
        self.records.last().map_or(self.initial_expected_reward, |r| r.expected_reward)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs GRPO from a uniform policy.
///
/// Each iteration freezes the old policy, samples a group from it, and
/// takes `inner_steps` gradient-ascent steps on the regularized surrogate.
pub fn train(env: &SyntheticEnv, cfg: &TrainConfig, reward_cfg: &RewardConfig) -> Result<TrainTrace, GrpoError> {
    cfg.validate()?;
    reward_cfg.validate()?;
    if env.n_outcomes() > ENUMERATION_LIMIT {
        return Err(GrpoError::SpaceTooLarge { size: env.n_outcomes(), limit: ENUMERATION_LIMIT });
    }
    let table = env.reward_table(reward_cfg)?;
    let optimal_reward = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let options = AdvantageOptions { epsilon: cfg.epsilon, std_mode: cfg.std_mode };
    let reg = cfg.regularizer();
    let mut rng = stream_rng(cfg.seed, Stream::Sampler);

    let mut policy = ToyPolicy::uniform(env.action_counts());
    let initial_expected_reward = expected_reward_from_table(env, &policy, &table);
    let mut records = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let old_policy = policy.clone();
        let mut group =
            sample_group_with_rng(env, &policy, &old_policy, cfg.group_size, reward_cfg, &options, &mut rng)?;
        let mut grad_norm = 0.0;
        for _ in 0..cfg.inner_steps {
            let grad = policy_gradient(&group, &policy, &old_policy, reg)?;
            grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            for (theta, g) in policy.logits_mut().iter_mut().zip(&grad) {
                *theta += cfg.learning_rate * g;
            }
        }
        group.refresh(&policy);
        records.push(TraceRecord {
            iter,
            expected_reward: expected_reward_from_table(env, &policy, &table),
            objective: grpo_objective(&group, &policy, &old_policy, reg)?,
            kl: policy.kl_divergence(&old_policy)?,
            grad_norm,
        });
    }

    Ok(TrainTrace { records, initial_expected_reward, optimal_reward, final_policy: policy })
}
