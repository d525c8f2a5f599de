use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GrpoError;

/// Per-step independent softmax policy over a fixed action alphabet.
///
/// Logits are stored flat, step after step, so gradients are plain vectors
/// of the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    action_counts: Vec<usize>,
    logits: Vec<f64>,
}

impl ToyPolicy {
    pub fn uniform(action_counts: &[usize]) -> Self {
        let total = action_counts.iter().sum();
        ToyPolicy { action_counts: action_counts.to_vec(), logits: vec![0.0; total] }
    }

    pub fn from_logits(action_counts: &[usize], logits: Vec<f64>) -> Result<Self, GrpoError> {
        let total: usize = action_counts.iter().sum();
        if logits.len() != total {
            return Err(GrpoError::ShapeMismatch { expected: total, actual: logits.len() });
        }
        if action_counts.contains(&0) {
            return Err(GrpoError::InvalidConfig("every step needs at least one action".into()));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(GrpoError::InvalidConfig("logits must be finite".into()));
        }
        Ok(ToyPolicy { action_counts: action_counts.to_vec(), logits })
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn n_steps(&self) -> usize {
        self.action_counts.len()
    }

    pub fn n_params(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    fn offset(&self, step: usize) -> usize {
        self.action_counts[..step].iter().sum()
    }

    pub fn step_logits(&self, step: usize) -> &[f64] {
        let start = self.offset(step);
        &self.logits[start..start + self.action_counts[step]]
    }

    /// Log-softmax of one step's logits.
    pub fn step_log_probs(&self, step: usize) -> Vec<f64> {
        let z = self.step_logits(step);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        z.iter().map(|x| x - lse).collect()
    }

    pub fn step_probs(&self, step: usize) -> Vec<f64> {
        self.step_log_probs(step).into_iter().map(f64::exp).collect()
    }

    pub fn log_prob(&self, actions: &[usize]) -> f64 {
        debug_assert_eq!(actions.len(), self.n_steps());
        actions.iter().enumerate().map(|(s, &a)| self.step_log_probs(s)[a]).sum()
    }

    /// `∇_θ log π(actions)`: per step, one-hot of the taken action minus the
    /// step's probabilities.
    pub fn grad_log_prob(&self, actions: &[usize]) -> Vec<f64> {
        let mut grad = Vec::with_capacity(self.n_params());
        for (s, &a) in actions.iter().enumerate() {
            for (b, p) in self.step_probs(s).into_iter().enumerate() {
                grad.push(if a == b { 1.0 - p } else { -p });
            }
        }
        grad
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.n_steps())
            .map(|s| {
                let probs = self.step_probs(s);
                let draw: f64 = rng.random();
                let mut acc = 0.0;
                for (a, p) in probs.iter().enumerate() {
                    acc += p;
                    if draw < acc {
                        return a;
                    }
                }
                probs.len() - 1
            })
            .collect()
    }

    fn check_shape(&self, other: &ToyPolicy) -> Result<(), GrpoError> {
        if self.action_counts != other.action_counts {
            return Err(GrpoError::ShapeMismatch { expected: self.n_params(), actual: other.n_params() });
        }
        Ok(())
    }

    /// Exact `KL(self ‖ other)`, summed over steps.
    pub fn kl_divergence(&self, other: &ToyPolicy) -> Result<f64, GrpoError> {
        self.check_shape(other)?;
        let mut kl = 0.0;
        for s in 0..self.n_steps() {
            let lp = self.step_log_probs(s);
            let lq = other.step_log_probs(s);
            kl += lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum::<f64>();
        }
        // Rounding can leave a tiny negative value for identical distributions.
        Ok(kl.max(0.0))
    }

    /// `∇_θ KL(π_θ ‖ other)`: `p_b·(log p_b − log q_b − KL_s)` per step.
    pub fn grad_kl_divergence(&self, other: &ToyPolicy) -> Result<Vec<f64>, GrpoError> {
        self.check_shape(other)?;
        let mut grad = Vec::with_capacity(self.n_params());
        for s in 0..self.n_steps() {
            let lp = self.step_log_probs(s);
            let lq = other.step_log_probs(s);
            let diffs: Vec<f64> = lp.iter().zip(&lq).map(|(a, b)| a - b).collect();
            let kl_s: f64 = lp.iter().zip(&diffs).map(|(a, d)| a.exp() * d).sum();
            grad.extend(lp.iter().zip(&diffs).map(|(a, d)| a.exp() * (d - kl_s)));
        }
        Ok(grad)
    }

    /// Sum of per-step entropies.
    pub fn entropy(&self) -> f64 {
        (0..self.n_steps())
            .map(|s| -self.step_log_probs(s).iter().map(|l| l.exp() * l).sum::<f64>())
            .sum()
    }

    /// `∇_θ H`: `−p_b·(log p_b + H_s)` per step.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let mut grad = Vec::with_capacity(self.n_params());
        for s in 0..self.n_steps() {
            let lp = self.step_log_probs(s);
            let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
            grad.extend(lp.iter().map(|l| -l.exp() * (l + h)));
        }
        grad
    }
}
