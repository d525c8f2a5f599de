//! Structural statistics over chain corpora.
//!
//! Per-chain counts go into a [`CorpusAccumulator`], which keeps exact
//! integer sums so partial accumulators merge associatively and the final
//! means, correlations and moments do not depend on merge order.

mod stats;

pub use stats::{
    fit_slope_origin, pearson, student_t_two_sided, welch_from_moments, welch_t_test, Moments, WelchResult,
    P_DISPLAY_FLOOR,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::ChainDocument;
use crate::reward::{chain_length, LengthUnit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("EmptyCorpus: no chains")]
    EmptyCorpus,
    #[error("DegenerateInput: {0}")]
    DegenerateInput(String),
    #[error("ConstantSeries: correlation of a constant series is undefined")]
    ConstantSeries,
    #[error("DegenerateVariance: {0}")]
    DegenerateVariance(String),
    #[error("BadBins: {0}")]
    BadBins(String),
    #[error("TooFewBins: need at least 3 populated bins, got {0}")]
    TooFewBins(usize),
}

impl AnalyticsError {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyticsError::EmptyCorpus => "EmptyCorpus",
            AnalyticsError::DegenerateInput(_) => "DegenerateInput",
            AnalyticsError::ConstantSeries => "ConstantSeries",
            AnalyticsError::DegenerateVariance(_) => "DegenerateVariance",
            AnalyticsError::BadBins(_) => "BadBins",
            AnalyticsError::TooFewBins(_) => "TooFewBins",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStats {
    pub n_exogenous: u64,
    pub n_endogenous: u64,
    /// Parent references, i.e. edges of the causal graph.
    pub n_paths: u64,
    pub total_vars: u64,
    pub length: u64,
    pub correct: Option<bool>,
}

/// Counts for one document. `correct` compares the verdict with the gold
/// label when there is one.
pub fn chain_stats(doc: &ChainDocument) -> ChainStats {
    chain_stats_with(doc, LengthUnit::Steps)
}

pub fn chain_stats_with(doc: &ChainDocument, unit: LengthUnit) -> ChainStats {
    let c = &doc.chain;
    let (u, v) = (c.n_exogenous() as u64, c.n_endogenous() as u64);
    ChainStats {
        n_exogenous: u,
        n_endogenous: v,
        n_paths: c.n_edges() as u64,
        total_vars: u + v,
        length: chain_length(doc, unit),
        correct: doc.gold_label.map(|g| g == c.verdict),
    }
}

/// Metrics compared between corpora, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Exogenous,
    Endogenous,
    Paths,
    TotalVars,
    Length,
    Correct,
}

impl Metric {
    pub const ALL: [Metric; 6] =
        [Metric::Exogenous, Metric::Endogenous, Metric::Paths, Metric::TotalVars, Metric::Length, Metric::Correct];

    fn index(self) -> usize {
        self as usize
    }

    fn value(self, s: &ChainStats) -> Option<u64> {
        match self {
            Metric::Exogenous => Some(s.n_exogenous),
            Metric::Endogenous => Some(s.n_endogenous),
            Metric::Paths => Some(s.n_paths),
            Metric::TotalVars => Some(s.total_vars),
            Metric::Length => Some(s.length),
            Metric::Correct => s.correct.map(u64::from),
        }
    }
}

/// Exact first and second moments of an integer series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntMoments {
    pub n: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl IntMoments {
    pub fn push(&mut self, x: u64) {
        self.n += 1;
        self.sum += x as u128;
        self.sum_sq += (x as u128) * (x as u128);
    }

    pub fn merge(&mut self, other: &IntMoments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.n as f64
    }

    /// `n·Σx² − (Σx)²`, exact.
    fn centered_ss_times_n(&self) -> u128 {
        self.n as u128 * self.sum_sq - self.sum * self.sum
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        self.centered_ss_times_n() as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }

    pub fn moments(&self) -> Moments {
        Moments { n: self.n as f64, mean: self.mean(), var: self.variance() }
    }
}

/// Mergeable partial aggregate of a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusAccumulator {
    pub metrics: [IntMoments; 6],
    /// `Σ total_vars · n_paths`, for the slope and correlation.
    pub sum_vars_paths: u128,
    /// Per length: (labelled count, correct count).
    pub by_length: BTreeMap<u64, (u64, u64)>,
}

impl CorpusAccumulator {
    pub fn push(&mut self, s: &ChainStats) {
        for m in Metric::ALL {
            if let Some(v) = m.value(s) {
                self.metrics[m.index()].push(v);
            }
        }
        self.sum_vars_paths += s.total_vars as u128 * s.n_paths as u128;
        if let Some(c) = s.correct {
            let e = self.by_length.entry(s.length).or_default();
            e.0 += 1;
            e.1 += u64::from(c);
        }
    }

    pub fn merge(&mut self, other: &CorpusAccumulator) {
        for (a, b) in self.metrics.iter_mut().zip(&other.metrics) {
            a.merge(b);
        }
        self.sum_vars_paths += other.sum_vars_paths;
        for (len, (n, c)) in &other.by_length {
            let e = self.by_length.entry(*len).or_default();
            e.0 += n;
            e.1 += c;
        }
    }

    pub fn n_chains(&self) -> u64 {
        self.metrics[Metric::Exogenous.index()].n
    }

    pub fn metric(&self, m: Metric) -> &IntMoments {
        &self.metrics[m.index()]
    }

    fn pearson_vars_paths(&self) -> Option<f64> {
        let x = self.metric(Metric::TotalVars);
        let y = self.metric(Metric::Paths);
        let n = x.n as i128;
        let cov = n * self.sum_vars_paths as i128 - x.sum as i128 * y.sum as i128;
        let (vx, vy) = (x.centered_ss_times_n(), y.centered_ss_times_n());
        if n < 2 || vx == 0 || vy == 0 {
            return None;
        }
        Some((cov as f64 / ((vx as f64).sqrt() * (vy as f64).sqrt())).clamp(-1.0, 1.0))
    }
}

impl<'a> FromIterator<&'a ChainStats> for CorpusAccumulator {
    fn from_iter<I: IntoIterator<Item = &'a ChainStats>>(iter: I) -> Self {
        let mut acc = CorpusAccumulator::default();
        for s in iter {
            acc.push(s);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub bin: usize,
    /// Inclusive lower edge.
    pub lo: f64,
    /// Exclusive upper edge, except for the last bin.
    pub hi: f64,
    pub accuracy: f64,
    pub count: u64,
}

impl ProfileBin {
    pub fn midpoint(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }
}

/// Accuracy per length bin. Edges must be finite and strictly increasing;
/// `None` means unit-width bins `[L, L+1)` over the observed lengths. Empty
/// bins are omitted and lengths outside the edges are ignored.
pub fn length_accuracy_profile(
    acc: &CorpusAccumulator,
    bin_edges: Option<&[f64]>,
) -> Result<Vec<ProfileBin>, AnalyticsError> {
    let Some(edges) = bin_edges else {
        return Ok(acc
            .by_length
            .iter()
            .enumerate()
            .map(|(i, (&len, &(n, c)))| ProfileBin {
                bin: i,
                lo: len as f64,
                hi: len as f64 + 1.0,
                accuracy: c as f64 / n as f64,
                count: n,
            })
            .collect());
    };
    if edges.len() < 2 {
        return Err(AnalyticsError::BadBins("need at least two edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalyticsError::BadBins("edges must be finite and strictly increasing".into()));
    }
    let last = edges.len() - 2;
    let mut counts = vec![(0u64, 0u64); last + 1];
    for (&len, &(n, c)) in &acc.by_length {
        let x = len as f64;
        let i = match edges.partition_point(|&e| e <= x) {
            0 => continue,
            k if k == edges.len() && x == edges[last + 1] => last,
            k if k == edges.len() => continue,
            k => k - 1,
        };
        counts[i].0 += n;
        counts[i].1 += c;
    }
    Ok(counts
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(i, &(n, c))| ProfileBin {
            bin: i,
            lo: edges[i],
            hi: edges[i + 1],
            accuracy: c as f64 / n as f64,
            count: n,
        })
        .collect())
}

/// Profile as CSV with header `bin,lo,hi,accuracy,count`.
pub fn profile_to_csv(profile: &[ProfileBin]) -> String {
    let mut out = String::from("bin,lo,hi,accuracy,count\n");
    for b in profile {
        writeln!(out, "{},{},{},{},{}", b.bin, b.lo, b.hi, b.accuracy, b.count).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvertedU {
    pub is_inverted_u: bool,
    /// `bin` of the profile entry with the highest fitted accuracy.
    pub peak_bin: usize,
    pub quad_coeff: f64,
}

/// Relative size below which the quadratic coefficient counts as zero.
const QUAD_TOL: f64 = 1e-12;

/// Fits `a + b·x + c·x²` (x centered on the mean midpoint) to the profile
/// by least squares. The profile is an inverted U when `c < 0` and the
/// vertex lies strictly between the first and last midpoints.
pub fn inverted_u_check(profile: &[ProfileBin]) -> Result<InvertedU, AnalyticsError> {
    if profile.len() < 3 {
        return Err(AnalyticsError::TooFewBins(profile.len()));
    }
    let xs: Vec<f64> = profile.iter().map(ProfileBin::midpoint).collect();
    let ys: Vec<f64> = profile.iter().map(|b| b.accuracy).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let xc: Vec<f64> = xs.iter().map(|x| x - xbar).collect();
    let [a, b, c] = quadratic_fit(&xc, &ys);

    let fitted = |x: f64| a + b * x + c * x * x;
    let peak = (0..profile.len())
        .max_by(|&i, &j| fitted(xc[i]).total_cmp(&fitted(xc[j])).then(j.cmp(&i)))
        .expect("non-empty profile");

    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(f64::MIN_POSITIVE);
    let spread = xc.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let curved = c * spread * spread < -QUAD_TOL * scale;
    let interior = curved && {
        let vertex = -b / (2.0 * c);
        let (lo, hi) = (xc[0], xc[xc.len() - 1]);
        vertex > lo && vertex < hi
    };
    Ok(InvertedU { is_inverted_u: curved && interior, peak_bin: profile[peak].bin, quad_coeff: c })
}

/// Coefficients `[a, b, c]` of the least-squares quadratic, via the normal
/// equations solved by Gaussian elimination with partial pivoting.
fn quadratic_fit(x: &[f64], y: &[f64]) -> [f64; 3] {
    let mut m = [[0.0f64; 4]; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let p = [1.0, xi, xi * xi];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += p[r] * p[c];
            }
            m[r][3] += p[r] * yi;
        }
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            let pivot_row = m[col];
            for (v, p) in m[r].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
        }
    }
    let mut out = [0.0; 3];
    for r in (0..3).rev() {
        let tail: f64 = (r + 1..3).map(|c| m[r][c] * out[c]).sum();
        out[r] = (m[r][3] - tail) / m[r][r];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricWelch {
    pub metric: Metric,
    pub t: f64,
    pub dof: f64,
    pub p: f64,
    pub p_display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub n_chains: u64,
    pub avg_exogenous: f64,
    pub avg_endogenous: f64,
    pub avg_paths: f64,
    pub avg_length: f64,
    /// `None` when no chain carries a gold label.
    pub accuracy: Option<f64>,
    pub exo_proportion: f64,
    pub path_efficiency: f64,
    /// Through-origin fit of paths against total variables.
    pub slope: f64,
    /// `None` when either series is constant.
    pub pearson_r: Option<f64>,
    pub length_profile: Vec<ProfileBin>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub compare: Option<Box<CorpusReport>>,
    /// Welch tests of this corpus against `compare`, one per metric that
    /// varies in at least one of them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub welch: Option<Vec<MetricWelch>>,
}

impl CorpusReport {
    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn welch_for(&self, metric: Metric) -> Option<&MetricWelch> {
        self.welch.as_ref()?.iter().find(|w| w.metric == metric)
    }
}

fn summarize(acc: &CorpusAccumulator, bin_edges: Option<&[f64]>) -> Result<CorpusReport, AnalyticsError> {
    if acc.n_chains() == 0 {
        return Err(AnalyticsError::EmptyCorpus);
    }
    let total = acc.metric(Metric::TotalVars);
    let correct = acc.metric(Metric::Correct);
    let sum_total = total.sum as f64;
    Ok(CorpusReport {
        n_chains: acc.n_chains(),
        avg_exogenous: acc.metric(Metric::Exogenous).mean(),
        avg_endogenous: acc.metric(Metric::Endogenous).mean(),
        avg_paths: acc.metric(Metric::Paths).mean(),
        avg_length: acc.metric(Metric::Length).mean(),
        accuracy: (correct.n > 0).then(|| correct.mean()),
        exo_proportion: acc.metric(Metric::Exogenous).sum as f64 / sum_total,
        path_efficiency: acc.metric(Metric::Paths).sum as f64 / sum_total,
        // Every chain has at least one variable, so Σx² > 0.
        slope: acc.sum_vars_paths as f64 / total.sum_sq as f64,
        pearson_r: acc.pearson_vars_paths(),
        length_profile: length_accuracy_profile(acc, bin_edges)?,
        compare: None,
        welch: None,
    })
}

/// Report for one corpus, with an optional comparison corpus.
pub fn corpus_report(
    corpus: &CorpusAccumulator,
    compare: Option<&CorpusAccumulator>,
    bin_edges: Option<&[f64]>,
) -> Result<CorpusReport, AnalyticsError> {
    let mut report = summarize(corpus, bin_edges)?;
    if let Some(other) = compare {
        let other_report = summarize(other, bin_edges)?;
        let mut tests = Vec::new();
        for m in Metric::ALL {
            let (a, b) = (corpus.metric(m), other.metric(m));
            if a.n < 2 || b.n < 2 {
                continue;
            }
            match welch_from_moments(a.moments(), b.moments()) {
                Ok(w) => tests.push(MetricWelch { metric: m, t: w.t, dof: w.dof, p: w.p, p_display: w.p_display() }),
                Err(AnalyticsError::DegenerateVariance(_)) => {}
                Err(e) => return Err(e),
            }
        }
        report.compare = Some(Box::new(other_report));
        report.welch = Some(tests);
    }
    Ok(report)
}

pub fn corpus_report_from_docs(
    docs: &[ChainDocument],
    compare: Option<&[ChainDocument]>,
) -> Result<CorpusReport, AnalyticsError> {
    let acc = |d: &[ChainDocument]| d.iter().map(chain_stats).collect::<Vec<_>>().iter().collect::<CorpusAccumulator>();
    let main = acc(docs);
    let other = compare.map(acc);
    corpus_report(&main, other.as_ref(), None)
}
