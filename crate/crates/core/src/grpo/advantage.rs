use serde::{Deserialize, Serialize};

use super::GrpoError;

/// Largest exponent accepted by [`importance_ratio`]; `exp(700)` is still
/// finite in double precision, `exp(710)` is not.
pub const MAX_LOG_RATIO: f64 = 700.0;

/// Which standard deviation normalizes the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Divide by `K`.
    #[default]
    Population,
    /// Divide by `K − 1`.
    Sample,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn group_std(values: &[f64], mode: StdMode) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|r| (r - m) * (r - m)).sum();
    let denom = match mode {
        StdMode::Population => values.len() as f64,
        StdMode::Sample => (values.len() - 1) as f64,
    };
    (ss / denom).sqrt()
}

/// Group-relative advantages `(R_i − mean) / (std + ε)` with the population
/// standard deviation.
pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>, GrpoError> {
    group_advantages_with(rewards, epsilon, StdMode::Population)
}

pub fn group_advantages_with(rewards: &[f64], epsilon: f64, mode: StdMode) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(GrpoError::InvalidConfig(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(GrpoError::InvalidConfig(format!("non-finite reward {bad}")));
    }
    let m = mean(rewards);
    let scale = group_std(rewards, mode) + epsilon;
    if scale == 0.0 {
        // Constant group with ε = 0.
        return Ok(vec![0.0; rewards.len()]);
    }
    let mut advantages: Vec<f64> = rewards.iter().map(|r| (r - m) / scale).collect();
    // Remove the rounding residue so the mean is zero to working precision.
    let residue = mean(&advantages);
    for a in &mut advantages {
        *a -= residue;
    }
    Ok(advantages)
}

/// `π_new / π_old` from log-probabilities.
pub fn importance_ratio(logp_new: f64, logp_old: f64) -> Result<f64, GrpoError> {
    if !logp_new.is_finite() || !logp_old.is_finite() {
        return Err(GrpoError::InvalidConfig(format!(
            "log-probabilities must be finite, got {logp_new} and {logp_old}"
        )));
    }
    let exponent = logp_new - logp_old;
    if exponent > MAX_LOG_RATIO {
        return Err(GrpoError::Overflow { exponent });
    }
    Ok(exponent.exp())
}
