//! Composite rule-based reward for reasoning chains.
//!
//! `R = R_c + β_s·R_s + β_l·R_l` where
//!
//! * `R_c = r_correct · 1[match(a_pred, a_gt)]`
//! * `R_s = γ · tanh((|U| − |V|) / δ)`
//! * `R_l = −λ · dist(L, [l_min, l_max])`

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{render_template, ChainDocument};
use crate::scm::{Label, ReasoningChain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("BadLabel: {0:?}")]
    BadLabel(String),
    #[error("BadInterval: lower bound {lo} exceeds upper bound {hi}")]
    BadInterval { lo: f64, hi: f64 },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("MissingGold: document has no gold label")]
    MissingGold,
}

impl RewardError {
    pub fn name(&self) -> &'static str {
        match self {
            RewardError::BadLabel(_) => "BadLabel",
            RewardError::BadInterval { .. } => "BadInterval",
            RewardError::InvalidConfig(_) => "InvalidConfig",
            RewardError::MissingGold => "MissingGold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    #[default]
    Steps,
    Characters,
}

/// Reward hyperparameters.
///
/// Defaults keep `β_s·γ` below `r_correct`, so a correct answer always
/// outweighs the structure term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub r_correct: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
    pub l_min: u64,
    pub l_max: u64,
    pub beta_s: f64,
    pub beta_l: f64,
    pub match_mode: MatchMode,
    pub length_unit: LengthUnit,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            r_correct: 1.0,
            gamma: 0.5,
            delta: 2.0,
            lambda: 0.1,
            l_min: 2,
            l_max: 8,
            beta_s: 1.0,
            beta_l: 1.0,
            match_mode: MatchMode::Exact,
            length_unit: LengthUnit::Steps,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let positive = [("r_correct", self.r_correct), ("gamma", self.gamma), ("delta", self.delta)];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(RewardError::InvalidConfig(format!("{name} must be positive and finite, got {value}")));
            }
        }
        let non_negative = [("lambda", self.lambda), ("beta_s", self.beta_s), ("beta_l", self.beta_l)];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(RewardError::InvalidConfig(format!("{name} must be non-negative and finite, got {value}")));
            }
        }
        if self.l_min > self.l_max {
            return Err(RewardError::InvalidConfig(format!(
                "l_min ({}) must not exceed l_max ({})",
                self.l_min, self.l_max
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RewardError> {
        let cfg: RewardConfig = toml::from_str(text).map_err(|e| RewardError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self, RewardError> {
        let cfg: RewardConfig = serde_json::from_str(text).map_err(|e| RewardError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; `.json` files are read as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, RewardError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RewardError::InvalidConfig(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|ext| ext == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_c: f64,
    pub r_s: f64,
    pub r_l: f64,
    pub total: f64,
    pub delta_uv: i64,
    pub length: u64,
}

fn normalize_fuzzy(s: &str) -> String {
    s.trim().chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Compares a predicted answer with the gold label.
///
/// Exact mode parses the prediction as a label (case-insensitive) and
/// errors if that fails; fuzzy mode compares after lowercasing and dropping
/// every non-alphanumeric character.
pub fn match_answers(a_pred: &str, a_gt: Label, mode: MatchMode) -> Result<bool, RewardError> {
    match mode {
        MatchMode::Exact => {
            let pred: Label = a_pred.parse().map_err(|_| RewardError::BadLabel(a_pred.to_string()))?;
            Ok(pred == a_gt)
        }
        MatchMode::Fuzzy => Ok(normalize_fuzzy(a_pred) == normalize_fuzzy(a_gt.as_str())),
    }
}

pub fn correctness_reward(a_pred: &str, a_gt: Label, cfg: &RewardConfig) -> Result<f64, RewardError> {
    Ok(if match_answers(a_pred, a_gt, cfg.match_mode)? { cfg.r_correct } else { 0.0 })
}

/// `γ·tanh(Δ/δ)` for a raw variable-count difference.
pub fn structure_reward_for_delta(delta_uv: i64, cfg: &RewardConfig) -> f64 {
    cfg.gamma * (delta_uv as f64 / cfg.delta).tanh()
}

pub fn delta_uv(chain: &ReasoningChain) -> i64 {
    chain.n_exogenous() as i64 - chain.n_endogenous() as i64
}

pub fn structure_reward(chain: &ReasoningChain, cfg: &RewardConfig) -> f64 {
    structure_reward_for_delta(delta_uv(chain), cfg)
}

/// Distance from `x` to the closed interval `[lo, hi]`.
pub fn interval_distance(x: f64, lo: f64, hi: f64) -> Result<f64, RewardError> {
    if lo > hi {
        return Err(RewardError::BadInterval { lo, hi });
    }
    Ok((lo - x).max(x - hi).max(0.0))
}

/// Chain length `L(y)` in the configured unit.
pub fn chain_length(doc: &ChainDocument, unit: LengthUnit) -> u64 {
    match unit {
        LengthUnit::Steps => doc.chain.n_endogenous() as u64,
        LengthUnit::Characters => render_template(doc).chars().count() as u64,
    }
}

pub fn length_reward_for_length(length: u64, cfg: &RewardConfig) -> f64 {
    let dist = interval_distance(length as f64, cfg.l_min as f64, cfg.l_max as f64)
        .expect("validated config has l_min <= l_max");
    // Avoid emitting -0.0 inside the interval.
    if dist == 0.0 {
        0.0
    } else {
        -cfg.lambda * dist
    }
}

pub fn length_reward(doc: &ChainDocument, cfg: &RewardConfig) -> f64 {
    length_reward_for_length(chain_length(doc, cfg.length_unit), cfg)
}

/// Scores a document against a gold label. The predicted answer is the
/// chain's verdict.
pub fn composite_reward(doc: &ChainDocument, a_gt: Label, cfg: &RewardConfig) -> Result<RewardBreakdown, RewardError> {
    cfg.validate()?;
    let r_c = correctness_reward(doc.chain.verdict.as_str(), a_gt, cfg)?;
    let delta = delta_uv(&doc.chain);
    let r_s = structure_reward_for_delta(delta, cfg);
    let length = chain_length(doc, cfg.length_unit);
    let r_l = length_reward_for_length(length, cfg);
    let total = r_c + cfg.beta_s * r_s + cfg.beta_l * r_l;
    Ok(RewardBreakdown { r_c, r_s, r_l, total, delta_uv: delta, length })
}

/// Scores a document against its own gold label.
pub fn score_document(doc: &ChainDocument, cfg: &RewardConfig) -> Result<RewardBreakdown, RewardError> {
    let gold = doc.gold_label.ok_or(RewardError::MissingGold)?;
    composite_reward(doc, gold, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{EndogenousVariable, ExogenousVariable, VariableId};

    fn doc(n_u: u32, n_v: u32, verdict: Label) -> ChainDocument {
        let exo = (1..=n_u).map(|i| ExogenousVariable::new(i, format!("e{i}"))).collect();
        let endo = (1..=n_v)
            .map(|i| {
                let parent = if i == 1 { VariableId::exogenous(1) } else { VariableId::endogenous(i - 1) };
                EndogenousVariable::new(i, vec![parent], "r", "d")
            })
            .collect();
        ChainDocument::new(ReasoningChain::new("c", exo, endo, verdict))
    }

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn matching() {
        assert!(match_answers("Supported", Label::Supported, MatchMode::Exact).unwrap());
        assert!(match_answers(" supported.", Label::Supported, MatchMode::Fuzzy).unwrap());
        assert!(!match_answers("Refuted", Label::Supported, MatchMode::Exact).unwrap());
        assert!(!match_answers("refuted!", Label::Supported, MatchMode::Fuzzy).unwrap());
        assert_eq!(
            match_answers("supported.", Label::Supported, MatchMode::Exact),
            Err(RewardError::BadLabel("supported.".into()))
        );
    }

    #[test]
    fn correctness() {
        let c = cfg();
        assert_eq!(correctness_reward("Supported", Label::Supported, &c).unwrap(), 1.0);
        assert_eq!(correctness_reward("Refuted", Label::Supported, &c).unwrap(), 0.0);
        let c = RewardConfig { r_correct: 2.5, ..cfg() };
        assert_eq!(correctness_reward("Supported", Label::Supported, &c).unwrap(), 2.5);
    }

    #[test]
    fn structure() {
        let one = RewardConfig { gamma: 1.0, delta: 2.0, ..cfg() };
        assert_eq!(structure_reward(&doc(3, 3, Label::Supported).chain, &one), 0.0);
        // tanh(1) = 0.76159415595576488811945828260479...
        let plus = structure_reward(&doc(4, 2, Label::Supported).chain, &one);
        assert!((plus - 0.761_594_155_955_764_9).abs() < 1e-15);
        let minus = structure_reward(&doc(2, 4, Label::Supported).chain, &one);
        assert!((minus + 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn intervals() {
        assert_eq!(interval_distance(5.0, 3.0, 8.0).unwrap(), 0.0);
        assert_eq!(interval_distance(1.0, 3.0, 8.0).unwrap(), 2.0);
        assert_eq!(interval_distance(10.0, 3.0, 8.0).unwrap(), 2.0);
        assert_eq!(interval_distance(3.0, 3.0, 3.0).unwrap(), 0.0);
        assert!(matches!(interval_distance(1.0, 4.0, 3.0), Err(RewardError::BadInterval { .. })));
    }

    #[test]
    fn length() {
        let c = RewardConfig { l_min: 3, l_max: 8, lambda: 0.1, ..cfg() };
        assert_eq!(length_reward_for_length(5, &c), 0.0);
        assert!((length_reward_for_length(12, &c) + 0.4).abs() < 1e-15);
        let c = RewardConfig { lambda: 0.5, ..c };
        assert_eq!(length_reward_for_length(1, &c), -1.0);
        assert_eq!(length_reward(&doc(1, 5, Label::Supported), &c), 0.0);
    }

    #[test]
    fn character_length_counts_rendered_template() {
        let d = doc(1, 1, Label::Supported);
        let expected = render_template(&d).chars().count() as u64;
        assert_eq!(chain_length(&d, LengthUnit::Characters), expected);
        assert_eq!(expected, "u1: e1\nv1: [u1] => r :: d\nANSWER: Supported".len() as u64);
    }

    #[test]
    fn composite_weighting() {
        // R_c = 1, R_s = 0.5, R_l = -0.2 by construction:
        // gamma chosen so gamma*tanh(1) = 0.5, lambda*dist = 0.2.
        let gamma = 0.5 / 1f64.tanh();
        let c = RewardConfig {
            gamma,
            delta: 2.0,
            lambda: 0.2,
            l_min: 1,
            l_max: 1,
            beta_s: 0.3,
            beta_l: 0.2,
            ..cfg()
        };
        let b = composite_reward(&doc(4, 2, Label::Supported), Label::Supported, &c).unwrap();
        assert_eq!(b.r_c, 1.0);
        assert!((b.r_s - 0.5).abs() < 1e-15);
        assert!((b.r_l + 0.2).abs() < 1e-15);
        assert!((b.total - 1.11).abs() < 1e-12);
        assert_eq!(b.delta_uv, 2);
        assert_eq!(b.length, 2);
    }

    #[test]
    fn composite_all_zero_and_degenerate() {
        let b = composite_reward(&doc(3, 3, Label::Refuted), Label::Supported, &cfg()).unwrap();
        assert_eq!(b.total, 0.0);
        let c = RewardConfig { beta_s: 0.0, beta_l: 0.0, ..cfg() };
        let b = composite_reward(&doc(5, 1, Label::Supported), Label::Supported, &c).unwrap();
        assert_eq!(b.total, b.r_c);
    }

    #[test]
    fn config_validation_and_loading() {
        assert!(cfg().validate().is_ok());
        assert!(RewardConfig { delta: 0.0, ..cfg() }.validate().is_err());
        assert!(RewardConfig { l_min: 9, ..cfg() }.validate().is_err());
        assert!(RewardConfig { lambda: -1.0, ..cfg() }.validate().is_err());
        let c = RewardConfig::from_toml_str("gamma = 1.0\nmatch_mode = \"fuzzy\"\nl_max = 4\n").unwrap();
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.match_mode, MatchMode::Fuzzy);
        assert_eq!(c.r_correct, 1.0);
        assert!(RewardConfig::from_toml_str("gama = 1.0").is_err());
        let c = RewardConfig::from_json_str(r#"{"beta_s": 0.0, "length_unit": "characters"}"#).unwrap();
        assert_eq!(c.length_unit, LengthUnit::Characters);
        assert_eq!(score_document(&doc(1, 1, Label::Supported), &cfg()), Err(RewardError::MissingGold));
    }
}
