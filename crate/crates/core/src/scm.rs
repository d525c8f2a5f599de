//! Structural causal model types for reasoning chains.
//!
//! A [`ReasoningChain`] is the materialized form of an SCM `(U, V, F)`:
//! exogenous variables are evidence statements with no parents, endogenous
//! variables are derived conclusions, each carrying its parent set and the
//! natural-language statement of its structural function. The endogenous
//! list is in generation order, and a chain is structurally valid when that
//! order never references a parent before it exists.

use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScmError {
    #[error("UnknownParent: {0} is referenced but never declared")]
    UnknownParent(VariableId),
    #[error("CycleDetected: {}", join_ids(.0))]
    CycleDetected(Vec<VariableId>),
    #[error("DuplicateId: {0} is declared more than once")]
    DuplicateId(VariableId),
    #[error("DuplicateParent: {child} lists {parent} twice")]
    DuplicateParent { child: VariableId, parent: VariableId },
    #[error("EmptyParents: {0} has no parents")]
    EmptyParents(VariableId),
    #[error("WrongKind: {0} is declared in the wrong variable list")]
    WrongKind(VariableId),
    #[error("IndexGap: expected {0} to be declared (indices must run 1..n)")]
    IndexGap(VariableId),
    #[error("EmptyText: {0} has empty evidence text")]
    EmptyText(VariableId),
    #[error("NoSink: graph has no endogenous sink")]
    NoSink,
    #[error("MultipleSinks: {}", join_ids(.0))]
    MultipleSinks(Vec<VariableId>),
    #[error("InvalidChain: {} structural violation(s)", .0.violations.len())]
    InvalidChain(ValidityReport),
    #[error("BadVariableId: {0:?}")]
    BadVariableId(String),
    #[error("BadLabel: {0:?}")]
    BadLabel(String),
}

impl ScmError {
    /// Stable error name, used on the CLI and across language boundaries.
    pub fn name(&self) -> &'static str {
        match self {
            ScmError::UnknownParent(_) => "UnknownParent",
            ScmError::CycleDetected(_) => "CycleDetected",
            ScmError::DuplicateId(_) => "DuplicateId",
            ScmError::DuplicateParent { .. } => "DuplicateParent",
            ScmError::EmptyParents(_) => "EmptyParents",
            ScmError::WrongKind(_) => "WrongKind",
            ScmError::IndexGap(_) => "IndexGap",
            ScmError::EmptyText(_) => "EmptyText",
            ScmError::NoSink => "NoSink",
            ScmError::MultipleSinks(_) => "MultipleSinks",
            ScmError::InvalidChain(_) => "InvalidChain",
            ScmError::BadVariableId(_) => "BadVariableId",
            ScmError::BadLabel(_) => "BadLabel",
        }
    }
}

fn join_ids(ids: &[VariableId]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariableKind {
    Exogenous,
    Endogenous,
}

impl VariableKind {
    fn prefix(self) -> char {
        match self {
            VariableKind::Exogenous => 'u',
            VariableKind::Endogenous => 'v',
        }
    }
}

/// Identifier of a variable, rendered `u<index>` or `v<index>`.
///
/// Ordering puts every exogenous id before every endogenous id, then sorts by
/// index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub kind: VariableKind,
    pub index: u32,
}

impl VariableId {
    pub fn exogenous(index: u32) -> Self {
        assert!(index >= 1, "variable indices start at 1");
        VariableId { kind: VariableKind::Exogenous, index }
    }

    pub fn endogenous(index: u32) -> Self {
        assert!(index >= 1, "variable indices start at 1");
        VariableId { kind: VariableKind::Endogenous, index }
    }

    pub fn is_exogenous(&self) -> bool {
        self.kind == VariableKind::Exogenous
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.index)
    }
}

impl FromStr for VariableId {
    type Err = ScmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScmError::BadVariableId(s.to_string());
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('u') => VariableKind::Exogenous,
            Some('v') => VariableKind::Endogenous,
            _ => return Err(bad()),
        };
        let digits = chars.as_str();
        // Canonical form only: no sign, no leading zeros.
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let index: u32 = digits.parse().map_err(|_| bad())?;
        Ok(VariableId { kind, index })
    }
}

impl Serialize for VariableId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariableId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Verdict of a fact-verification chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Supported,
    Refuted,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Supported, Label::Refuted];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supported => "Supported",
            Label::Refuted => "Refuted",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Supported => Label::Refuted,
            Label::Refuted => Label::Supported,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ScmError;

    /// Case-insensitive; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("supported") {
            Ok(Label::Supported)
        } else if t.eq_ignore_ascii_case("refuted") {
            Ok(Label::Refuted)
        } else {
            Err(ScmError::BadLabel(s.to_string()))
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousVariable {
    pub id: VariableId,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_doc: Option<usize>,
}

impl ExogenousVariable {
    pub fn new(index: u32, text: impl Into<String>) -> Self {
        ExogenousVariable { id: VariableId::exogenous(index), text: text.into(), source_doc: None }
    }

    pub fn with_source(mut self, doc: usize) -> Self {
        self.source_doc = Some(doc);
        self
    }
}

/// An endogenous variable together with its structural function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndogenousVariable {
    pub id: VariableId,
    pub parents: Vec<VariableId>,
    pub rule_text: String,
    pub derived_text: String,
}

impl EndogenousVariable {
    pub fn new(
        index: u32,
        parents: Vec<VariableId>,
        rule_text: impl Into<String>,
        derived_text: impl Into<String>,
    ) -> Self {
        EndogenousVariable {
            id: VariableId::endogenous(index),
            parents,
            rule_text: rule_text.into(),
            derived_text: derived_text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningChain {
    pub claim: String,
    /// Kept sorted by index.
    pub exogenous: Vec<ExogenousVariable>,
    /// Generation order.
    pub endogenous: Vec<EndogenousVariable>,
    pub verdict: Label,
}

impl ReasoningChain {
    pub fn new(
        claim: impl Into<String>,
        mut exogenous: Vec<ExogenousVariable>,
        endogenous: Vec<EndogenousVariable>,
        verdict: Label,
    ) -> Self {
        exogenous.sort_by_key(|u| u.id);
        ReasoningChain { claim: claim.into(), exogenous, endogenous, verdict }
    }

    pub fn n_exogenous(&self) -> usize {
        self.exogenous.len()
    }

    pub fn n_endogenous(&self) -> usize {
        self.endogenous.len()
    }

    /// Total parent references, i.e. the edge count of the causal graph.
    pub fn n_edges(&self) -> usize {
        self.endogenous.iter().map(|v| v.parents.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.exogenous.iter().map(|u| u.id).chain(self.endogenous.iter().map(|v| v.id))
    }

    /// Checks id well-formedness: kinds match their list, ids are unique and
    /// consecutive from 1, evidence text is non-empty, and every parent list
    /// is non-empty, duplicate-free and refers to declared variables.
    ///
    /// Ordering is not checked here; see [`check_structural_validity`].
    pub fn check_well_formed(&self) -> Result<(), ScmError> {
        let mut seen = HashSet::new();
        for u in &self.exogenous {
            if !u.id.is_exogenous() {
                return Err(ScmError::WrongKind(u.id));
            }
            if !seen.insert(u.id) {
                return Err(ScmError::DuplicateId(u.id));
            }
            if u.text.is_empty() {
                return Err(ScmError::EmptyText(u.id));
            }
        }
        for v in &self.endogenous {
            if v.id.is_exogenous() {
                return Err(ScmError::WrongKind(v.id));
            }
            if !seen.insert(v.id) {
                return Err(ScmError::DuplicateId(v.id));
            }
        }
        for index in 1..=self.exogenous.len() as u32 {
            let id = VariableId::exogenous(index);
            if !seen.contains(&id) {
                return Err(ScmError::IndexGap(id));
            }
        }
        for index in 1..=self.endogenous.len() as u32 {
            let id = VariableId::endogenous(index);
            if !seen.contains(&id) {
                return Err(ScmError::IndexGap(id));
            }
        }
        for v in &self.endogenous {
            if v.parents.is_empty() {
                return Err(ScmError::EmptyParents(v.id));
            }
            let mut local = HashSet::with_capacity(v.parents.len());
            for p in &v.parents {
                if !local.insert(*p) {
                    return Err(ScmError::DuplicateParent { child: v.id, parent: *p });
                }
                if !seen.contains(p) {
                    return Err(ScmError::UnknownParent(*p));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    /// Parent is declared, but only later in the generation order.
    ForwardReference,
    /// Variable lists itself as a parent.
    SelfReference,
    /// Parent is never declared.
    UnknownParent,
    /// The same endogenous id was inserted twice.
    DuplicateVariable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step_index: usize,
    pub variable: VariableId,
    pub missing_parents: Vec<VariableId>,
    pub code: ViolationCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Runs the structural validity gate over a chain.
///
/// Every exogenous variable is present from the start; endogenous variables
/// are then inserted in list order, and a step is a violation when any of its
/// parents is not yet present. Each variable is inserted whether or not its
/// step failed, so a single misplaced variable yields a single violation
/// rather than a cascade through its descendants.
pub fn check_structural_validity(chain: &ReasoningChain) -> ValidityReport {
    let declared: HashSet<VariableId> = chain.ids().collect();
    let mut present: HashSet<VariableId> = chain.exogenous.iter().map(|u| u.id).collect();
    let mut violations = Vec::new();

    for (step_index, v) in chain.endogenous.iter().enumerate() {
        let mut missing: Vec<VariableId> = Vec::new();
        for p in &v.parents {
            if !present.contains(p) && !missing.contains(p) {
                missing.push(*p);
            }
        }
        let code = if !missing.is_empty() {
            if missing.iter().any(|p| !declared.contains(p)) {
                Some(ViolationCode::UnknownParent)
            } else if missing.contains(&v.id) {
                Some(ViolationCode::SelfReference)
            } else {
                Some(ViolationCode::ForwardReference)
            }
        } else if present.contains(&v.id) {
            Some(ViolationCode::DuplicateVariable)
        } else {
            None
        };
        if let Some(code) = code {
            violations.push(Violation { step_index, variable: v.id, missing_parents: missing, code });
        }
        present.insert(v.id);
    }

    ValidityReport { valid: violations.is_empty(), violations }
}

/// DAG over `U ∪ V` with an edge `parent → child` for every parent reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    /// Exogenous ascending, then endogenous in chain order.
    pub nodes: Vec<VariableId>,
    pub edges: Vec<(VariableId, VariableId)>,
    pub topo_order: Vec<VariableId>,
}

impl CausalGraph {
    pub fn out_degree(&self, id: VariableId) -> usize {
        self.edges.iter().filter(|(p, _)| *p == id).count()
    }

    pub fn in_degree(&self, id: VariableId) -> usize {
        self.edges.iter().filter(|(_, c)| *c == id).count()
    }

    /// True when `order` is a permutation of the nodes that respects every edge.
    pub fn is_topological_order(&self, order: &[VariableId]) -> bool {
        if order.len() != self.nodes.len() {
            return false;
        }
        let pos: HashMap<VariableId, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        if pos.len() != order.len() || self.nodes.iter().any(|n| !pos.contains_key(n)) {
            return false;
        }
        self.edges.iter().all(|(p, c)| pos[p] < pos[c])
    }
}

/// Builds the causal graph of a chain.
///
/// The cached topological order is Kahn's algorithm with ties broken by node
/// position (exogenous ascending, then endogenous list order), so for a
/// structurally valid chain it is exactly that position order.
pub fn build_graph(chain: &ReasoningChain) -> Result<CausalGraph, ScmError> {
    chain.check_well_formed()?;

    let nodes: Vec<VariableId> = chain.ids().collect();
    let position: HashMap<VariableId, usize> = nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let edges: Vec<(VariableId, VariableId)> = chain
        .endogenous
        .iter()
        .flat_map(|v| v.parents.iter().map(move |p| (*p, v.id)))
        .collect();

    let mut in_degree = vec![0usize; nodes.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (p, c) in &edges {
        let (pi, ci) = (position[p], position[c]);
        in_degree[ci] += 1;
        children[pi].push(ci);
    }

    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..nodes.len()).filter(|&i| in_degree[i] == 0).map(Reverse).collect();
    let mut topo_order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(i)) = ready.pop() {
        topo_order.push(nodes[i]);
        for &c in &children[i] {
            in_degree[c] -= 1;
            if in_degree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }

    if topo_order.len() != nodes.len() {
        let mut stuck: Vec<VariableId> =
            (0..nodes.len()).filter(|&i| in_degree[i] > 0).map(|i| nodes[i]).collect();
        stuck.sort();
        return Err(ScmError::CycleDetected(stuck));
    }

    Ok(CausalGraph { nodes, edges, topo_order })
}

/// Returns the unique endogenous node with out-degree zero.
pub fn find_sink(graph: &CausalGraph) -> Result<VariableId, ScmError> {
    let referenced: HashSet<VariableId> = graph.edges.iter().map(|(p, _)| *p).collect();
    let sinks: Vec<VariableId> = graph
        .nodes
        .iter()
        .filter(|n| !n.is_exogenous() && !referenced.contains(n))
        .copied()
        .collect();
    match sinks.len() {
        0 => Err(ScmError::NoSink),
        1 => Ok(sinks[0]),
        _ => Err(ScmError::MultipleSinks(sinks)),
    }
}

/// One `(state, action, observation)` step of the sequential derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasoningStep {
    pub state: BTreeSet<VariableId>,
    pub action: EndogenousVariable,
    pub observation: String,
}

/// Serializes the graph construction into one step per endogenous variable.
pub fn assemble_steps(chain: &ReasoningChain) -> Result<Vec<ReasoningStep>, ScmError> {
    let report = check_structural_validity(chain);
    if !report.valid {
        return Err(ScmError::InvalidChain(report));
    }
    let mut state: BTreeSet<VariableId> = chain.exogenous.iter().map(|u| u.id).collect();
    let mut steps = Vec::with_capacity(chain.endogenous.len());
    for v in &chain.endogenous {
        steps.push(ReasoningStep { state: state.clone(), action: v.clone(), observation: v.derived_text.clone() });
        state.insert(v.id);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(i: u32) -> VariableId {
        VariableId::exogenous(i)
    }
    fn v(i: u32) -> VariableId {
        VariableId::endogenous(i)
    }

    fn chain(n_u: u32, derivations: &[(u32, &[VariableId])]) -> ReasoningChain {
        let exo = (1..=n_u).map(|i| ExogenousVariable::new(i, format!("fact {i}"))).collect();
        let endo = derivations
            .iter()
            .map(|(i, ps)| EndogenousVariable::new(*i, ps.to_vec(), format!("rule {i}"), format!("derived {i}")))
            .collect();
        ReasoningChain::new("claim", exo, endo, Label::Supported)
    }

    #[test]
    fn ids_render_and_parse() {
        assert_eq!(u(3).to_string(), "u3");
        assert_eq!(v(12).to_string(), "v12");
        assert_eq!("v12".parse::<VariableId>().unwrap(), v(12));
        for bad in ["", "u", "w1", "u0", "u01", "v-1", "v1x", "U1"] {
            assert!(bad.parse::<VariableId>().is_err(), "{bad}");
        }
        assert!(u(9) < v(1));
    }

    #[test]
    fn labels_parse_case_insensitively() {
        assert_eq!("SUPPORTED".parse::<Label>().unwrap(), Label::Supported);
        assert_eq!(" refuted ".parse::<Label>().unwrap(), Label::Refuted);
        assert_eq!(Label::Refuted.to_string(), "Refuted");
        assert!(matches!("NEI".parse::<Label>(), Err(ScmError::BadLabel(_))));
    }

    #[test]
    fn minimal_graph() {
        let c = chain(1, &[(1, &[u(1)])]);
        let g = build_graph(&c).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges, vec![(u(1), v(1))]);
    }

    #[test]
    fn two_hop_graph_edges_and_order() {
        let c = chain(2, &[(1, &[u(1), u(2)]), (2, &[v(1), u(2)])]);
        let g = build_graph(&c).unwrap();
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.topo_order, vec![u(1), u(2), v(1), v(2)]);
        assert!(g.is_topological_order(&g.topo_order));
    }

    #[test]
    fn cycle_is_detected() {
        let c = chain(1, &[(1, &[v(2)]), (2, &[v(1)])]);
        assert_eq!(build_graph(&c), Err(ScmError::CycleDetected(vec![v(1), v(2)])));
    }

    #[test]
    fn graph_rejects_undeclared_and_duplicate_ids() {
        let c = chain(1, &[(1, &[v(9)])]);
        assert_eq!(build_graph(&c), Err(ScmError::UnknownParent(v(9))));
        let c = chain(1, &[(1, &[u(1)]), (1, &[u(1)])]);
        assert_eq!(build_graph(&c), Err(ScmError::DuplicateId(v(1))));
        let c = chain(1, &[(1, &[u(1), u(1)])]);
        assert!(matches!(build_graph(&c), Err(ScmError::DuplicateParent { .. })));
        let c = chain(1, &[(2, &[u(1)])]);
        assert_eq!(build_graph(&c), Err(ScmError::IndexGap(v(1))));
        let c = chain(1, &[(1, &[])]);
        assert_eq!(build_graph(&c), Err(ScmError::EmptyParents(v(1))));
    }

    #[test]
    fn forward_order_is_valid() {
        let c = chain(2, &[(1, &[u(1)]), (2, &[v(1), u(2)])]);
        let r = check_structural_validity(&c);
        assert!(r.valid);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn forward_reference_is_reported_at_its_step() {
        let c = chain(1, &[(1, &[v(2)]), (2, &[u(1)])]);
        let r = check_structural_validity(&c);
        assert!(!r.valid);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].step_index, 0);
        assert_eq!(r.violations[0].missing_parents, vec![v(2)]);
        assert_eq!(r.violations[0].code, ViolationCode::ForwardReference);
    }

    #[test]
    fn violation_codes() {
        let r = check_structural_validity(&chain(1, &[(1, &[v(1)])]));
        assert_eq!(r.violations[0].code, ViolationCode::SelfReference);
        let r = check_structural_validity(&chain(1, &[(1, &[u(7)])]));
        assert_eq!(r.violations[0].code, ViolationCode::UnknownParent);
        let r = check_structural_validity(&chain(1, &[(1, &[u(1)]), (1, &[u(1)])]));
        assert_eq!(r.violations[0].code, ViolationCode::DuplicateVariable);
        assert_eq!(r.violations[0].step_index, 1);
    }

    #[test]
    fn assemble_minimal() {
        let c = chain(1, &[(1, &[u(1)])]);
        let steps = assemble_steps(&c).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].state, BTreeSet::from([u(1)]));
        assert_eq!(steps[0].action.id, v(1));
        assert_eq!(steps[0].observation, "derived 1");
    }

    #[test]
    fn assemble_expands_state() {
        let c = chain(2, &[(1, &[u(1)]), (2, &[v(1), u(2)])]);
        let steps = assemble_steps(&c).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].state, BTreeSet::from([u(1), u(2), v(1)]));
        assert!(steps.iter().all(|s| s.action.parents.iter().all(|p| s.state.contains(p))));
    }

    #[test]
    fn assemble_rejects_invalid_chain() {
        let c = chain(1, &[(1, &[v(2)]), (2, &[u(1)])]);
        assert!(matches!(assemble_steps(&c), Err(ScmError::InvalidChain(_))));
    }

    #[test]
    fn sinks() {
        let g = build_graph(&chain(1, &[(1, &[u(1)])])).unwrap();
        assert_eq!(find_sink(&g), Ok(v(1)));
        let g = build_graph(&chain(1, &[(1, &[u(1)]), (2, &[u(1)])])).unwrap();
        assert_eq!(find_sink(&g), Err(ScmError::MultipleSinks(vec![v(1), v(2)])));
        let g = build_graph(&chain(2, &[(1, &[u(1), u(2)]), (2, &[v(1)])])).unwrap();
        assert_eq!(find_sink(&g), Ok(v(2)));
        let g = build_graph(&chain(1, &[])).unwrap();
        assert_eq!(find_sink(&g), Err(ScmError::NoSink));
    }

    #[test]
    fn exogenous_sorted_on_construction() {
        let exo = vec![ExogenousVariable::new(2, "b"), ExogenousVariable::new(1, "a")];
        let c = ReasoningChain::new("c", exo, vec![], Label::Refuted);
        assert_eq!(c.exogenous[0].id, u(1));
    }
}
