//! Seeded Monte Carlo emulation of the discrimination experiment.
//!
//! Trials are grouped into fixed-size chunks. Chunk `c` draws from a ChaCha8 stream
//! keyed by `(seed, c)`, so the outcome of a batch depends only on the seed and the
//! trial count, never on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{StateEnsemble, SystemModel};
use crate::error::{Error, Result};
use crate::photodetection::BeliefState;
use crate::receiver::{map_phase, Strategy, TreeEvaluator};

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub trials: u64,
    pub errors: u64,
    /// `confusion[k][j]`: trials that sent state index `k` and decided `j`.
    pub confusion: Vec<Vec<u64>>,
}

impl TrialCounts {
    fn zero(m: usize) -> Self {
        TrialCounts {
            trials: 0,
            errors: 0,
            confusion: vec![vec![0; m]; m],
        }
    }

    fn add(mut self, other: TrialCounts) -> Self {
        self.trials += other.trials;
        self.errors += other.errors;
        for (a, b) in self.confusion.iter_mut().zip(other.confusion) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatchResult {
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    /// Binomial standard error `√(p̂(1 − p̂)/trials)`.
    pub stderr: f64,
    pub seed: u64,
    pub per_outcome_counts: Vec<Vec<u64>>,
}

impl TrialBatchResult {
    fn from_counts(counts: TrialCounts, seed: u64) -> Self {
        let p_hat = counts.errors as f64 / counts.trials as f64;
        TrialBatchResult {
            trials: counts.trials,
            errors: counts.errors,
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / counts.trials as f64).sqrt(),
            seed,
            per_outcome_counts: counts.confusion,
        }
    }

    /// Pools several batches (e.g. independent runs with different seeds).
    ///
    /// The pooled record keeps the seed of the first batch.
    pub fn pool(batches: &[TrialBatchResult]) -> Result<TrialBatchResult> {
        let first = batches
            .first()
            .ok_or_else(|| Error::InvalidParameter("nothing to pool".into()))?;
        let m = first.per_outcome_counts.len();
        let counts = batches.iter().fold(TrialCounts::zero(m), |acc, b| {
            acc.add(TrialCounts {
                trials: b.trials,
                errors: b.errors,
                confusion: b.per_outcome_counts.clone(),
            })
        });
        Ok(Self::from_counts(counts, first.seed))
    }
}

/// Runs `trials` independent discrimination trials of `strategy`.
pub fn simulate_trials(
    strategy: &Strategy,
    ensemble: &StateEnsemble,
    model: &SystemModel,
    trials: u64,
    seed: u64,
) -> Result<TrialBatchResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if strategy.slices() != model.slices() {
        return Err(Error::ShapeMismatch {
            kind: strategy.kind().name(),
            slices: model.slices(),
            expected: strategy.kind().parameter_count(model.slices()),
            actual: strategy.ratios().len(),
        });
    }
    let m = ensemble.m();
    let chunks = trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(trials - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            run_chunk(strategy, ensemble, model, n, &mut rng)
        })
        .try_reduce(|| TrialCounts::zero(m), |a, b| Ok(a.add(b)))?;
    Ok(TrialBatchResult::from_counts(counts, seed))
}

fn run_chunk(
    strategy: &Strategy,
    ensemble: &StateEnsemble,
    model: &SystemModel,
    trials: u64,
    rng: &mut ChaCha8Rng,
) -> Result<TrialCounts> {
    let m = ensemble.m();
    let eval = TreeEvaluator::new(ensemble, model);
    let schedule = strategy.schedule();
    let mut counts = TrialCounts::zero(m);
    let mut likelihood = vec![0.0; m];
    for _ in 0..trials {
        let sent = sample_index(ensemble.priors(), rng.gen());
        let mut belief = BeliefState::from_priors(ensemble);
        let mut node = 0;
        for depth in 0..eval.slices() {
            let target = map_phase(&belief, ensemble);
            let ratio = schedule.ratio(depth, node);
            let clicked = rng.gen::<f64>() < -(-eval.slice_mean(sent, target, ratio)).exp_m1();
            for (k, l) in likelihood.iter_mut().enumerate() {
                let mu = eval.slice_mean(k, target, ratio);
                *l = if clicked { -(-mu).exp_m1() } else { (-mu).exp() };
            }
            belief.absorb(&likelihood)?;
            node = 2 * node + 1 + usize::from(clicked);
        }
        let decided = map_phase(&belief, ensemble);
        counts.trials += 1;
        counts.errors += u64::from(decided != sent);
        counts.confusion[sent][decided] += 1;
    }
    Ok(counts)
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the round-off gap above the last cumulative weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
