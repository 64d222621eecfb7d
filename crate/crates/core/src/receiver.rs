//! Exact evaluation of adaptive receivers by enumerating every detection history.
//!
//! Detection histories form a complete binary tree of depth `N`. Internal nodes
//! use heap numbering: the root (slice 1) is node 0 and node `i` has children
//! `2i + 1` (no click) and `2i + 2` (click). A history `d_1 … d_N` therefore has
//! index `Σ d_j 2^{N-j}` and sits at leaf position `2^N - 1 + index`.
//!
//! The recursion carries the per-hypothesis likelihood of the prefix observed so
//! far. The displacement nulls the maximum-posterior hypothesis; its amplitude
//! `|β| = r·|α|` comes from the schedule. Leaf contributions are combined by
//! pairwise (left + right) summation, so results do not depend on traversal order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::{StateEnsemble, SystemModel};
use crate::error::{Error, Result};
use crate::infotheory::ChannelMatrix;
use crate::photodetection::{detected_mean, displaced_mean_polar, BeliefState, SliceOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    NonOptimized,
    Flat,
    Sequential,
    Historical,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::NonOptimized,
        StrategyKind::Flat,
        StrategyKind::Sequential,
        StrategyKind::Historical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::NonOptimized => "non-optimized",
            StrategyKind::Flat => "flat",
            StrategyKind::Sequential => "sequential",
            StrategyKind::Historical => "historical",
        }
    }

    /// Number of amplitude ratios a schedule of this kind holds for `slices` slices.
    pub fn parameter_count(self, slices: usize) -> usize {
        match self {
            StrategyKind::NonOptimized | StrategyKind::Flat => 1,
            StrategyKind::Sequential => slices,
            StrategyKind::Historical => (1usize << slices) - 1,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy kind {s:?}")))
    }
}

/// Displacement-amplitude schedule expressed as ratios `r = |β|/|α|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    kind: StrategyKind,
    slices: usize,
    ratios: Vec<f64>,
}

impl Strategy {
    pub fn new(kind: StrategyKind, slices: usize, ratios: Vec<f64>) -> Result<Self> {
        if slices == 0 {
            return Err(Error::InvalidParameter("at least one slice is required".into()));
        }
        if kind == StrategyKind::Historical && slices >= usize::BITS as usize - 1 {
            return Err(Error::InvalidParameter(format!("{slices} slices is too deep for a history tree")));
        }
        let expected = kind.parameter_count(slices);
        if ratios.len() != expected {
            return Err(Error::ShapeMismatch {
                kind: kind.name(),
                slices,
                expected,
                actual: ratios.len(),
            });
        }
        if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParameter("amplitude ratios must be finite and non-negative".into()));
        }
        if kind == StrategyKind::NonOptimized && ratios[0] != 1.0 {
            return Err(Error::InvalidParameter("non-optimized strategy uses |β| = |α|".into()));
        }
        Ok(Strategy { kind, slices, ratios })
    }

    pub fn flat(slices: usize, ratio: f64) -> Result<Self> {
        Self::new(StrategyKind::Flat, slices, vec![ratio])
    }

    pub fn sequential(ratios: Vec<f64>) -> Result<Self> {
        Self::new(StrategyKind::Sequential, ratios.len(), ratios)
    }

    pub fn historical(slices: usize, ratios: Vec<f64>) -> Result<Self> {
        Self::new(StrategyKind::Historical, slices, ratios)
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// Ratio used at tree node `node` (heap numbering), which lies at depth `depth`.
    pub fn ratio(&self, depth: usize, node: usize) -> f64 {
        self.schedule().ratio(depth, node)
    }

    pub(crate) fn schedule(&self) -> Schedule<'_> {
        match self.kind {
            StrategyKind::NonOptimized | StrategyKind::Flat => Schedule::Flat(self.ratios[0]),
            StrategyKind::Sequential => Schedule::Sequential(&self.ratios),
            StrategyKind::Historical => Schedule::Historical(&self.ratios),
        }
    }
}

/// Borrowed view of a schedule, used by the evaluator and the optimizers.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Schedule<'a> {
    Flat(f64),
    Sequential(&'a [f64]),
    Historical(&'a [f64]),
}

impl Schedule<'_> {
    #[inline]
    pub(crate) fn ratio(&self, depth: usize, node: usize) -> f64 {
        match self {
            Schedule::Flat(r) => *r,
            Schedule::Sequential(r) => r[depth],
            Schedule::Historical(r) => r[node],
        }
    }
}

/// `|β| = |α|` in every slice.
pub fn non_optimized_strategy(slices: usize) -> Result<Strategy> {
    Strategy::new(StrategyKind::NonOptimized, slices, vec![1.0])
}

/// Ordered on/off outcomes `d_1 … d_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DetectionHistory {
    outcomes: Vec<SliceOutcome>,
}

impl DetectionHistory {
    pub fn new(outcomes: Vec<SliceOutcome>) -> Self {
        DetectionHistory { outcomes }
    }

    /// History whose outcome bits, first slice most significant, spell `index`.
    pub fn from_index(index: usize, slices: usize) -> Self {
        let outcomes = (0..slices)
            .map(|j| SliceOutcome::from_clicked((index >> (slices - 1 - j)) & 1 == 1))
            .collect();
        DetectionHistory { outcomes }
    }

    pub fn index(&self) -> usize {
        self.outcomes
            .iter()
            .fold(0, |acc, o| (acc << 1) | usize::from(o.clicked()))
    }

    pub fn outcomes(&self) -> &[SliceOutcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

impl fmt::Display for DetectionHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            f.write_str(if o.clicked() { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl TryFrom<String> for DetectionHistory {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        let outcomes = s
            .chars()
            .map(|c| match c {
                '0' => Ok(SliceOutcome::NoClick),
                '1' => Ok(SliceOutcome::Click),
                _ => Err(Error::InvalidParameter(format!("invalid history {s:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(DetectionHistory { outcomes })
    }
}

impl From<DetectionHistory> for String {
    fn from(h: DetectionHistory) -> Self {
        h.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub history: DetectionHistory,
    /// Occurrence probability `P_{D_H}` averaged over the priors.
    pub probability: f64,
    /// Decided state label `k` (1-based, phase `2πk/M`).
    pub decided_state: usize,
    /// Joint probability that this history occurs and the decision is right.
    pub correct_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub p_error: f64,
    pub per_history: Vec<HistoryRecord>,
    pub channel: ChannelMatrix,
}

/// Index of the largest posterior; ties go to the lowest index.
///
/// Indices are zero-based: index `i` is state `k = i + 1`.
pub fn map_phase(belief: &BeliefState, _ensemble: &StateEnsemble) -> usize {
    argmax(belief.probs())
}

#[inline]
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Shared tree walker. Likelihood vectors live in a scratch buffer with one
/// `M`-slot frame per depth.
pub(crate) struct TreeEvaluator<'a> {
    pub(crate) ensemble: &'a StateEnsemble,
    pub(crate) model: &'a SystemModel,
    priors: &'a [f64],
    m: usize,
    slices: usize,
}

impl<'a> TreeEvaluator<'a> {
    pub(crate) fn new(ensemble: &'a StateEnsemble, model: &'a SystemModel) -> Self {
        TreeEvaluator {
            ensemble,
            model,
            priors: ensemble.priors(),
            m: ensemble.m(),
            slices: model.slices(),
        }
    }

    pub(crate) fn slices(&self) -> usize {
        self.slices
    }

    pub(crate) fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.m * (self.slices + 1)]
    }

    /// Hypothesis nulled given prefix likelihoods.
    #[inline]
    pub(crate) fn target(&self, likelihood: &[f64]) -> usize {
        let mut best = 0;
        let mut best_w = self.priors[0] * likelihood[0];
        for k in 1..self.m {
            let w = self.priors[k] * likelihood[k];
            if w > best_w {
                best = k;
                best_w = w;
            }
        }
        best
    }

    /// Detected per-slice mean for hypothesis `k` when nulling `target` at ratio `ratio`.
    #[inline]
    pub(crate) fn slice_mean(&self, k: usize, target: usize, ratio: f64) -> f64 {
        let a = self.ensemble.modulus();
        let nbar = displaced_mean_polar(a, ratio * a, self.ensemble.relative_cos(k, target), self.model.visibility())
            / self.slices as f64;
        detected_mean(nbar, self.model)
    }

    /// `Σ_leaves max_k prior(k)·L(leaf|k)` of the subtree rooted at `node` (depth `depth`),
    /// given the prefix likelihoods in `scratch[..M]`.
    pub(crate) fn subtree_value(&self, schedule: &Schedule<'_>, scratch: &mut [f64], depth: usize, node: usize) -> f64 {
        self.walk(schedule, scratch, depth, node, &mut |_, _| {})
    }

    fn walk<F>(&self, schedule: &Schedule<'_>, scratch: &mut [f64], depth: usize, node: usize, leaf: &mut F) -> f64
    where
        F: FnMut(usize, &[f64]),
    {
        let m = self.m;
        let (like, rest) = scratch.split_at_mut(m);
        if depth == self.slices {
            leaf(node, like);
            let k = self.target(like);
            return self.priors[k] * like[k];
        }
        let target = self.target(like);
        let ratio = schedule.ratio(depth, node);
        for k in 0..m {
            rest[k] = like[k] * (-self.slice_mean(k, target, ratio)).exp();
        }
        let dark = self.walk(schedule, rest, depth + 1, 2 * node + 1, leaf);
        for k in 0..m {
            rest[k] = like[k] * -(-self.slice_mean(k, target, ratio)).exp_m1();
        }
        let bright = self.walk(schedule, rest, depth + 1, 2 * node + 2, leaf);
        dark + bright
    }

    /// Probability of a correct decision.
    pub(crate) fn success(&self, schedule: &Schedule<'_>) -> f64 {
        let mut scratch = self.scratch();
        scratch[..self.m].fill(1.0);
        self.subtree_value(schedule, &mut scratch, 0, 0)
    }

    /// Prefix likelihoods on arrival at `node`, written into `out`.
    pub(crate) fn node_likelihood(&self, schedule: &Schedule<'_>, node: usize, out: &mut [f64]) {
        // Path from the root: repeatedly take the parent.
        let mut path = Vec::with_capacity(self.slices);
        let mut n = node;
        while n > 0 {
            path.push(n);
            n = (n - 1) / 2;
        }
        out.fill(1.0);
        let mut current = 0usize;
        for (depth, &child) in path.iter().rev().enumerate() {
            let target = self.target(out);
            let ratio = schedule.ratio(depth, current);
            let clicked = child == 2 * current + 2;
            for (k, l) in out.iter_mut().enumerate() {
                let mu = self.slice_mean(k, target, ratio);
                *l *= if clicked { -(-mu).exp_m1() } else { (-mu).exp() };
            }
            current = child;
        }
    }
}

fn check_shape(strategy: &Strategy, model: &SystemModel) -> Result<()> {
    if strategy.slices() != model.slices() {
        return Err(Error::ShapeMismatch {
            kind: strategy.kind().name(),
            slices: model.slices(),
            expected: strategy.kind().parameter_count(model.slices()),
            actual: strategy.ratios().len(),
        });
    }
    Ok(())
}

/// Exact error probability without building the per-history table.
pub fn error_probability(strategy: &Strategy, ensemble: &StateEnsemble, model: &SystemModel) -> Result<f64> {
    check_shape(strategy, model)?;
    let eval = TreeEvaluator::new(ensemble, model);
    Ok((1.0 - eval.success(&strategy.schedule())).clamp(0.0, 1.0))
}

/// Exact error probability, per-history breakdown and induced channel.
pub fn evaluate_strategy(strategy: &Strategy, ensemble: &StateEnsemble, model: &SystemModel) -> Result<ErrorReport> {
    check_shape(strategy, model)?;
    let eval = TreeEvaluator::new(ensemble, model);
    let m = ensemble.m();
    let slices = model.slices();
    let first_leaf = (1usize << slices) - 1;
    let priors = ensemble.priors();

    let mut per_history = Vec::with_capacity(1 << slices);
    let mut rows = vec![vec![0.0; m]; m];
    let mut scratch = eval.scratch();
    scratch[..m].fill(1.0);
    let success = eval.walk(&strategy.schedule(), &mut scratch, 0, 0, &mut |node, like| {
        let decided = eval.target(like);
        for (row, l) in rows.iter_mut().zip(like) {
            row[decided] += l;
        }
        per_history.push(HistoryRecord {
            history: DetectionHistory::from_index(node - first_leaf, slices),
            probability: priors.iter().zip(like).map(|(p, l)| p * l).sum(),
            decided_state: decided + 1,
            correct_probability: priors[decided] * like[decided],
        });
    });
    let channel = ChannelMatrix::new(rows).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(ErrorReport {
        p_error: (1.0 - success).clamp(0.0, 1.0),
        per_history,
        channel,
    })
}

/// `P(decide j | sent k)` aggregated over all histories.
pub fn induced_channel(strategy: &Strategy, ensemble: &StateEnsemble, model: &SystemModel) -> Result<ChannelMatrix> {
    evaluate_strategy(strategy, ensemble, model).map(|r| r.channel)
}
