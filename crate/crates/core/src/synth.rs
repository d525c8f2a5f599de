//! Seeded generators for chains and corpora.
//!
//! [`random_chain`] builds well-formed chains in topological order (so they
//! always pass the validity gate) with exactly one sink. [`profiled_corpus`]
//! builds corpora whose structural statistics follow a [`CorpusProfile`].

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::format::ChainDocument;
use crate::rng::{stream_rng, Stream};
use crate::scm::{EndogenousVariable, ExogenousVariable, Label, ReasoningChain, VariableId};

const WORDS: &[&str] = &[
    "tower", "river", "album", "born", "1987", "director", "Paris", "band", "novel", "award", "city", "founded",
    "président", "東京", "not", "same", "team", "film", "year", "capital",
];

/// Fragments that stress the text escaping of the template format.
const AWKWARD: &[&str] = &[":", "::", " :: ", "\\", "\n", "\r\n", "ANSWER: Refuted", "[v1]", " => ", "\t"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub max_exogenous: usize,
    pub max_endogenous: usize,
    /// Probability of each optional extra parent edge.
    pub extra_edge_prob: f64,
    /// Mix escape-sensitive fragments into the text fields.
    pub awkward_text: bool,
    pub with_sources: bool,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams { max_exogenous: 5, max_endogenous: 5, extra_edge_prob: 0.3, awkward_text: true, with_sources: true }
    }
}

fn phrase<R: Rng + ?Sized>(rng: &mut R, awkward: bool) -> String {
    let n = rng.random_range(1..=5);
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(' ');
        }
        if awkward && rng.random_bool(0.15) {
            out.push_str(AWKWARD[rng.random_range(0..AWKWARD.len())]);
        } else {
            out.push_str(WORDS[rng.random_range(0..WORDS.len())]);
        }
    }
    out
}

/// Builds a chain with the given counts. The endogenous variables form a
/// backbone `v1 → v2 → … → vn` (so `vn` is the only sink), `v1` reads at least
/// one evidence variable, and `n_edges − n_endogenous` extra parent edges are
/// placed uniformly among the remaining admissible pairs.
///
/// Panics unless `n_exogenous ≥ 1`, `n_endogenous ≥ 1` and the edge count is
/// within `[n_endogenous, max]`.
pub fn chain_with_counts<R: Rng + ?Sized>(
    rng: &mut R,
    n_exogenous: usize,
    n_endogenous: usize,
    n_edges: usize,
    verdict: Label,
    awkward: bool,
) -> ReasoningChain {
    assert!(n_exogenous >= 1 && n_endogenous >= 1);
    let max_edges = max_edges(n_exogenous, n_endogenous);
    assert!((n_endogenous..=max_edges).contains(&n_edges), "edge count {n_edges} out of range");

    let mut parents: Vec<Vec<VariableId>> = vec![Vec::new(); n_endogenous];
    parents[0].push(VariableId::exogenous(rng.random_range(1..=n_exogenous) as u32));
    for (k, list) in parents.iter_mut().enumerate().skip(1) {
        list.push(VariableId::endogenous(k as u32));
    }

    // Every admissible (child, parent) pair not already used by the backbone.
    let mut candidates: Vec<(usize, VariableId)> = Vec::new();
    for (k, list) in parents.iter().enumerate() {
        let pool = (1..=n_exogenous as u32)
            .map(VariableId::exogenous)
            .chain((1..=k as u32).map(VariableId::endogenous));
        candidates.extend(pool.filter(|p| !list.contains(p)).map(|p| (k, p)));
    }
    let extra = n_edges - n_endogenous;
    let mut picks: Vec<usize> = sample(rng, candidates.len(), extra).into_vec();
    picks.sort_unstable();
    for i in picks {
        let (k, p) = candidates[i];
        parents[k].push(p);
    }
    for list in &mut parents {
        // Backbone parent first is not required; a stable order keeps output readable.
        list.sort();
    }

    let exogenous = (1..=n_exogenous as u32).map(|i| ExogenousVariable::new(i, phrase(rng, awkward))).collect();
    let endogenous = parents
        .into_iter()
        .enumerate()
        .map(|(k, ps)| {
            let rule = if rng.random_bool(0.1) { String::new() } else { phrase(rng, awkward) };
            EndogenousVariable::new(k as u32 + 1, ps, rule, phrase(rng, awkward))
        })
        .collect();
    ReasoningChain::new(phrase(rng, awkward), exogenous, endogenous, verdict)
}

/// Largest edge count admissible for the given variable counts.
pub fn max_edges(n_exogenous: usize, n_endogenous: usize) -> usize {
    (0..n_endogenous).map(|k| n_exogenous + k).sum()
}

/// A random, structurally valid, single-sink document.
pub fn random_chain<R: Rng + ?Sized>(rng: &mut R, params: &ChainParams) -> ChainDocument {
    let n_u = rng.random_range(1..=params.max_exogenous.max(1));
    let n_v = rng.random_range(1..=params.max_endogenous.max(1));
    let extra_room = max_edges(n_u, n_v) - n_v;
    let extra = (0..extra_room).filter(|_| rng.random_bool(params.extra_edge_prob)).count();
    let verdict = if rng.random_bool(0.5) { Label::Supported } else { Label::Refuted };
    let mut chain = chain_with_counts(rng, n_u, n_v, n_v + extra, verdict, params.awkward_text);

    let mut docs = Vec::new();
    if params.with_sources {
        let n_docs = rng.random_range(0..=3);
        docs = (0..n_docs).map(|_| phrase(rng, params.awkward_text)).collect();
        if n_docs > 0 {
            for u in &mut chain.exogenous {
                if rng.random_bool(0.6) {
                    u.source_doc = Some(rng.random_range(0..n_docs));
                }
            }
        }
    }
    let mut doc = ChainDocument::new(chain).with_evidence_docs(docs);
    if rng.random_bool(0.7) {
        doc.gold_label = Some(if rng.random_bool(0.5) { Label::Supported } else { Label::Refuted });
    }
    doc
}

/// `n` random documents from the corpus stream of `seed`.
pub fn random_documents(seed: u64, n: usize, params: &ChainParams) -> Vec<ChainDocument> {
    let mut rng = stream_rng(seed, Stream::Corpus);
    (0..n).map(|_| random_chain(&mut rng, params)).collect()
}

/// Shape of a synthetic corpus.
///
/// Total variable counts are drawn from a rounded normal; edges follow
/// `efficiency·total_mean + edge_slope·(total − total_mean)` plus Gaussian
/// noise, which fixes the corpus path efficiency and, through `edge_slope`
/// and `edge_noise_sd`, the correlation between variables and edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusProfile {
    pub total_mean: f64,
    pub total_sd: f64,
    pub exogenous_share: f64,
    pub efficiency: f64,
    pub edge_slope: f64,
    pub edge_noise_sd: f64,
    pub accuracy: f64,
}

impl CorpusProfile {
    /// Evidence-light, tightly coupled chains: efficiency 0.60, variable/edge
    /// correlation ≈ 0.85, accuracy 0.6916.
    pub fn sft_like() -> Self {
        CorpusProfile {
            total_mean: 14.0,
            total_sd: 4.0,
            exogenous_share: 0.6,
            efficiency: 0.60,
            edge_slope: 0.60,
            edge_noise_sd: 1.487,
            accuracy: 0.6916,
        }
    }

    /// Evidence-heavy, decoupled chains: 88.7 % exogenous, efficiency 0.29,
    /// correlation ≈ 0.16, accuracy 0.7035.
    pub fn rlhf_like() -> Self {
        CorpusProfile {
            total_mean: 18.0,
            total_sd: 3.0,
            exogenous_share: 0.887,
            efficiency: 0.29,
            edge_slope: 0.0648,
            edge_noise_sd: 1.2,
            accuracy: 0.7035,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; u1 in (0, 1].
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `n` documents following `profile`, each with a gold label and a verdict
/// that matches it with probability `profile.accuracy`.
pub fn profiled_corpus(profile: &CorpusProfile, n: usize, seed: u64) -> Vec<ChainDocument> {
    let mut rng = stream_rng(seed, Stream::Corpus);
    // The edge count is rounded to an integer, which adds 1/12 to its variance.
    let noise_sd = (profile.edge_noise_sd.powi(2) - 1.0 / 12.0).max(0.0).sqrt();
    (0..n)
        .map(|_| {
            let total = (profile.total_mean + profile.total_sd * normal(&mut rng)).round().max(3.0) as usize;
            let n_u = ((profile.exogenous_share * total as f64).round() as usize).clamp(1, total - 1);
            let n_v = total - n_u;
            let target = profile.efficiency * profile.total_mean
                + profile.edge_slope * (total as f64 - profile.total_mean)
                + noise_sd * normal(&mut rng);
            let edges = (target.round().max(0.0) as usize).clamp(n_v, max_edges(n_u, n_v));
            let gold = if rng.random_bool(0.5) { Label::Supported } else { Label::Refuted };
            let verdict = if rng.random_bool(profile.accuracy) { gold } else { gold.flipped() };
            let chain = chain_with_counts(&mut rng, n_u, n_v, edges, verdict, false);
            ChainDocument::new(chain).with_gold(gold)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{build_graph, check_structural_validity, find_sink};

    #[test]
    fn counts_are_exact() {
        let mut rng = stream_rng(1, Stream::Corpus);
        for (u, v) in [(1, 1), (3, 1), (2, 4), (6, 2)] {
            for e in v..=max_edges(u, v) {
                let c = chain_with_counts(&mut rng, u, v, e, Label::Supported, false);
                assert_eq!((c.n_exogenous(), c.n_endogenous(), c.n_edges()), (u, v, e));
                assert!(check_structural_validity(&c).valid);
                let g = build_graph(&c).unwrap();
                assert_eq!(find_sink(&g).unwrap(), VariableId::endogenous(v as u32));
            }
        }
    }

    #[test]
    fn random_documents_are_valid_and_reproducible() {
        let docs = random_documents(9, 200, &ChainParams::default());
        assert_eq!(docs, random_documents(9, 200, &ChainParams::default()));
        for d in &docs {
            d.validate().unwrap();
            assert!(check_structural_validity(&d.chain).valid);
        }
    }
}
