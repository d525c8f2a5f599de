//! Enumerable chain-generation environment.
//!
//! An episode picks one option per step. Each option contributes evidence
//! statements, derivations and optionally a verdict; the chosen options are
//! concatenated into a chain whose first derivation reads every evidence
//! variable and whose later derivations each read the previous one. The
//! last verdict chosen wins.

use serde::{Deserialize, Serialize};

use super::GrpoError;
use crate::format::ChainDocument;
use crate::reward::{composite_reward, RewardConfig};
use crate::scm::{EndogenousVariable, ExogenousVariable, Label, ReasoningChain, VariableId};

/// Upper bound on the number of distinct action sequences an environment
/// may define.
pub const MAX_OUTCOMES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Derivation {
    pub rule_text: String,
    pub derived_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fragment {
    #[serde(default)]
    pub exogenous: Vec<String>,
    #[serde(default)]
    pub derivations: Vec<Derivation>,
    #[serde(default)]
    pub verdict: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDescriptor {
    #[serde(default)]
    pub name: String,
    pub options: Vec<Fragment>,
}

/// JSON descriptor of an environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvDescriptor {
    pub claim: String,
    pub gold_label: Label,
    pub steps: Vec<StepDescriptor>,
}

#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    descriptor: EnvDescriptor,
    action_counts: Vec<usize>,
    n_outcomes: usize,
}

impl SyntheticEnv {
    pub fn new(descriptor: EnvDescriptor) -> Result<Self, GrpoError> {
        if descriptor.steps.is_empty() {
            return Err(GrpoError::Env("environment has no steps".into()));
        }
        let action_counts: Vec<usize> = descriptor.steps.iter().map(|s| s.options.len()).collect();
        if let Some(step) = action_counts.iter().position(|&n| n == 0) {
            return Err(GrpoError::Env(format!("step {step} has no options")));
        }
        let n_outcomes = action_counts
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n).filter(|&t| t <= MAX_OUTCOMES))
            .ok_or_else(|| GrpoError::Env(format!("more than {MAX_OUTCOMES} action sequences")))?;
        let env = SyntheticEnv { descriptor, action_counts, n_outcomes };
        for index in 0..env.n_outcomes {
            let actions = env.decode(index);
            env.try_build(&actions)?;
        }
        Ok(env)
    }

    pub fn from_json(text: &str) -> Result<Self, GrpoError> {
        let descriptor: EnvDescriptor =
            serde_json::from_str(text).map_err(|e| GrpoError::Env(format!("bad descriptor: {e}")))?;
        Self::new(descriptor)
    }

    pub fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    pub fn gold_label(&self) -> Label {
        self.descriptor.gold_label
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    /// Mixed-radix decoding, first step most significant.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut actions = vec![0; self.action_counts.len()];
        for (slot, &n) in actions.iter_mut().zip(&self.action_counts).rev() {
            *slot = index % n;
            index /= n;
        }
        actions
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.action_counts).fold(0, |acc, (&a, &n)| acc * n + a)
    }

    fn try_build(&self, actions: &[usize]) -> Result<ChainDocument, GrpoError> {
        if actions.len() != self.action_counts.len()
            || actions.iter().zip(&self.action_counts).any(|(&a, &n)| a >= n)
        {
            return Err(GrpoError::Env(format!("invalid action sequence {actions:?}")));
        }
        let fragments: Vec<&Fragment> =
            actions.iter().enumerate().map(|(s, &a)| &self.descriptor.steps[s].options[a]).collect();

        let exogenous: Vec<ExogenousVariable> = fragments
            .iter()
            .flat_map(|f| f.exogenous.iter())
            .enumerate()
            .map(|(i, text)| ExogenousVariable::new(i as u32 + 1, text.clone()))
            .collect();
        if exogenous.is_empty() {
            return Err(GrpoError::Env(format!("actions {actions:?} produce no evidence")));
        }
        let mut endogenous = Vec::new();
        for (i, d) in fragments.iter().flat_map(|f| f.derivations.iter()).enumerate() {
            let index = i as u32 + 1;
            let parents = if index == 1 {
                exogenous.iter().map(|u| u.id).collect()
            } else {
                vec![VariableId::endogenous(index - 1)]
            };
            endogenous.push(EndogenousVariable::new(index, parents, d.rule_text.clone(), d.derived_text.clone()));
        }
        if endogenous.is_empty() {
            return Err(GrpoError::Env(format!("actions {actions:?} produce no derivations")));
        }
        let verdict = fragments
            .iter()
            .rev()
            .find_map(|f| f.verdict)
            .ok_or_else(|| GrpoError::Env(format!("actions {actions:?} produce no verdict")))?;

        let chain = ReasoningChain::new(self.descriptor.claim.clone(), exogenous, endogenous, verdict);
        Ok(ChainDocument::new(chain).with_gold(self.descriptor.gold_label))
    }

    /// The chain produced by an action sequence. Every valid sequence builds,
    /// which is checked when the environment is constructed.
    pub fn build(&self, actions: &[usize]) -> ChainDocument {
        self.try_build(actions).expect("action sequence outside the environment")
    }

    /// Rewards of every outcome, indexed by [`SyntheticEnv::encode`].
    pub fn reward_table(&self, cfg: &RewardConfig) -> Result<Vec<f64>, GrpoError> {
        (0..self.n_outcomes)
            .map(|i| {
                let doc = self.build(&self.decode(i));
                Ok(composite_reward(&doc, self.descriptor.gold_label, cfg)?.total)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{check_structural_validity, find_sink, build_graph};

    fn fragment(u: usize, v: usize, verdict: Option<Label>) -> Fragment {
        Fragment {
            exogenous: (0..u).map(|i| format!("evidence {i}")).collect(),
            derivations: (0..v)
                .map(|i| Derivation { rule_text: format!("rule {i}"), derived_text: format!("step {i}") })
                .collect(),
            verdict,
        }
    }

    fn env() -> SyntheticEnv {
        SyntheticEnv::new(EnvDescriptor {
            claim: "c".into(),
            gold_label: Label::Supported,
            steps: vec![
                StepDescriptor { name: "evidence".into(), options: vec![fragment(1, 0, None), fragment(3, 0, None)] },
                StepDescriptor {
                    name: "derive".into(),
                    options: vec![
                        fragment(0, 1, Some(Label::Supported)),
                        fragment(0, 2, Some(Label::Refuted)),
                        fragment(1, 2, Some(Label::Supported)),
                    ],
                },
            ],
        })
        .unwrap()
    }

    #[test]
    fn mixed_radix_round_trip() {
        let e = env();
        assert_eq!(e.n_outcomes(), 6);
        for i in 0..e.n_outcomes() {
            assert_eq!(e.encode(&e.decode(i)), i);
        }
        assert_eq!(e.decode(5), vec![1, 2]);
    }

    #[test]
    fn built_chains_are_valid_with_one_sink() {
        let e = env();
        for i in 0..e.n_outcomes() {
            let doc = e.build(&e.decode(i));
            assert!(check_structural_validity(&doc.chain).valid);
            let g = build_graph(&doc.chain).unwrap();
            assert_eq!(find_sink(&g).unwrap(), VariableId::endogenous(doc.chain.n_endogenous() as u32));
        }
        let doc = e.build(&[1, 2]);
        assert_eq!(doc.chain.n_exogenous(), 4);
        assert_eq!(doc.chain.n_endogenous(), 2);
        assert_eq!(doc.chain.verdict, Label::Supported);
    }

    #[test]
    fn rejects_incomplete_outcomes() {
        let bad = EnvDescriptor {
            claim: "c".into(),
            gold_label: Label::Supported,
            steps: vec![StepDescriptor {
                name: String::new(),
                options: vec![fragment(1, 1, Some(Label::Supported)), fragment(1, 1, None)],
            }],
        };
        assert!(matches!(SyntheticEnv::new(bad), Err(GrpoError::Env(_))));
        let empty = EnvDescriptor { claim: "c".into(), gold_label: Label::Supported, steps: vec![] };
        assert!(SyntheticEnv::new(empty).is_err());
    }

    #[test]
    fn rejects_oversized_spaces() {
        let step = StepDescriptor { name: String::new(), options: vec![fragment(1, 1, Some(Label::Supported)); 11] };
        let big = EnvDescriptor { claim: "c".into(), gold_label: Label::Supported, steps: vec![step; 4] };
        assert!(SyntheticEnv::new(big).is_err());
    }
}
