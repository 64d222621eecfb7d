//! Derivative-free optimization of displacement-amplitude schedules.
//!
//! * flat: one ratio for every slice, dense grid followed by golden-section refinement.
//! * sequential: one ratio per slice, cyclic coordinate descent from the flat optimum and
//!   from random restarts, each polished by Nelder–Mead.
//! * historical: one ratio per history-tree node, breadth-first coordinate sweeps where
//!   each node only re-evaluates its own subtree.
//!
//! The error probability is piecewise smooth in the ratios (the maximum-posterior phase
//! rule switches discontinuously), so no gradients are used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{StateEnsemble, SystemModel};
use crate::error::{Error, Result};
use crate::receiver::{error_probability, Schedule, Strategy, StrategyKind, TreeEvaluator};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Upper bound on `|β|/|α|`.
    pub r_max: f64,
    /// Grid size for the flat scalar search.
    pub flat_grid: usize,
    /// Grid size for each coordinate line search.
    pub coordinate_grid: usize,
    /// Golden-section stopping width in ratio units.
    pub ratio_tolerance: f64,
    /// Stop coordinate sweeps once a full cycle improves by less than this.
    pub cycle_tolerance: f64,
    pub max_cycles: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Largest slice count accepted by the historical optimizer.
    pub historical_cap: usize,
    pub simplex_max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            r_max: 5.0,
            flat_grid: 64,
            coordinate_grid: 24,
            ratio_tolerance: 1e-5,
            cycle_tolerance: 1e-9,
            max_cycles: 200,
            restarts: 4,
            seed: 42,
            historical_cap: 10,
            simplex_max_evals: 4000,
        }
    }
}

impl OptimizerConfig {
    pub fn with_r_max(r_max: f64) -> Self {
        OptimizerConfig {
            r_max,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::InvalidParameter(format!("r_max must be positive, got {}", self.r_max)));
        }
        if self.flat_grid < 2 || self.coordinate_grid < 2 {
            return Err(Error::InvalidParameter("search grids need at least two points".into()));
        }
        if !(self.ratio_tolerance > 0.0) {
            return Err(Error::InvalidParameter("ratio tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub strategy: Strategy,
    pub p_error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iterate; non-increasing.
    pub objective_history: Vec<f64>,
}

fn push_monotone(history: &mut Vec<f64>, value: f64) {
    match history.last() {
        Some(&last) if value > last => {}
        _ => history.push(value),
    }
}

/// Result of a bracketed scalar search.
struct ScalarMin {
    x: f64,
    f: f64,
    converged: bool,
}

/// Grid scan over `[lo, hi]` followed by golden-section refinement around the best cell.
fn scan_and_refine<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, grid: usize, tol: f64) -> ScalarMin {
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..grid {
        let v = f(lo + step * i as f64);
        if v < best.1 {
            best = (i, v);
        }
    }
    let (i, fi) = best;
    let a = lo + step * i.saturating_sub(1) as f64;
    let b = (lo + step * (i + 1) as f64).min(hi);
    let (x, fx, converged) = golden_section(f, a, b, tol);
    if fx < fi {
        ScalarMin { x, f: fx, converged }
    } else {
        ScalarMin {
            x: lo + step * i as f64,
            f: fi,
            converged,
        }
    }
}

fn golden_section<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, bool) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let converged = (b - a).abs() < tol;
    if fc <= fd {
        (c, fc, converged)
    } else {
        (d, fd, converged)
    }
}

/// Optimizes a single ratio shared by every slice.
pub fn optimize_flat(ensemble: &StateEnsemble, model: &SystemModel, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let eval = TreeEvaluator::new(ensemble, model);
    let mut evals = 0usize;
    let mut objective = |r: f64| {
        evals += 1;
        1.0 - eval.success(&Schedule::Flat(r))
    };
    let baseline = objective(1.0_f64.min(config.r_max));
    let mut history = vec![baseline];
    let found = scan_and_refine(&mut objective, 0.0, config.r_max, config.flat_grid, config.ratio_tolerance);
    let (ratio, converged) = if found.f <= baseline {
        push_monotone(&mut history, found.f);
        (found.x, found.converged)
    } else {
        (1.0_f64.min(config.r_max), found.converged)
    };
    let strategy = Strategy::flat(model.slices(), ratio)?;
    let p_error = error_probability(&strategy, ensemble, model)?;
    Ok(OptimizationResult {
        strategy,
        p_error,
        iterations: evals,
        converged,
        objective_history: history,
    })
}

struct LocalRun {
    ratios: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn sequential_objective(eval: &TreeEvaluator<'_>, ratios: &[f64]) -> f64 {
    1.0 - eval.success(&Schedule::Sequential(ratios))
}

/// Cyclic coordinate descent followed by a bounded Nelder–Mead polish.
fn sequential_local(eval: &TreeEvaluator<'_>, start: Vec<f64>, config: &OptimizerConfig) -> LocalRun {
    let mut ratios = start;
    let mut value = sequential_objective(eval, &ratios);
    let mut history = vec![value];
    let mut converged = false;
    let mut cycles = 0;
    while cycles < config.max_cycles {
        cycles += 1;
        let before = value;
        for j in 0..ratios.len() {
            let mut trial = ratios.clone();
            let mut f = |r: f64| {
                trial[j] = r;
                sequential_objective(eval, &trial)
            };
            let found = scan_and_refine(&mut f, 0.0, config.r_max, config.coordinate_grid, config.ratio_tolerance);
            if found.f < value {
                ratios[j] = found.x;
                value = found.f;
                push_monotone(&mut history, value);
            }
        }
        if before - value < config.cycle_tolerance {
            converged = true;
            break;
        }
    }

    let polished = nelder_mead(
        |x: &[f64]| sequential_objective(eval, x),
        &ratios,
        0.0,
        config.r_max,
        config.simplex_max_evals,
        config.cycle_tolerance,
    );
    if polished.1 < value {
        ratios = polished.0;
        value = polished.1;
        push_monotone(&mut history, value);
    }
    LocalRun {
        ratios,
        value,
        iterations: cycles,
        converged,
        history,
    }
}

/// Box-constrained Nelder–Mead; points are clamped into `[lo, hi]` before evaluation.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], lo: f64, hi: f64, max_evals: usize, ftol: f64) -> (Vec<f64>, f64) {
    let n = start.len();
    let clamp = |x: Vec<f64>| x.into_iter().map(|v| v.clamp(lo, hi)).collect::<Vec<_>>();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut p = start.to_vec();
        let delta = if p[i] > 0.0 { 0.05 * p[i] } else { 0.025 * (hi - lo) };
        p[i] = if p[i] + delta <= hi { p[i] + delta } else { p[i] - delta };
        let p = clamp(p);
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = n + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 < ftol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect(),
            )
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (t, fref) = if fr < simplex[n].1 { (-0.5, fr) } else { (0.5, simplex[n].1) };
            let contracted = along(t);
            let fc = f(&contracted);
            evals += 1;
            if fc < fref {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let shrunk = clamp(best.iter().zip(&p.0).map(|(b, x)| b + 0.5 * (x - b)).collect());
                    p.1 = f(&shrunk);
                    p.0 = shrunk;
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Optimizes one ratio per slice. Seeds from `seed_strategy` (flat or sequential) or the
/// flat optimum, plus `config.restarts` uniform random starts.
pub fn optimize_sequential(
    ensemble: &StateEnsemble,
    model: &SystemModel,
    config: &OptimizerConfig,
    seed_strategy: Option<&Strategy>,
) -> Result<OptimizationResult> {
    config.validate()?;
    let slices = model.slices();
    let seed = match seed_strategy {
        Some(s) => broadcast_to_slices(s, slices)?,
        None => {
            let flat = optimize_flat(ensemble, model, config)?;
            vec![flat.strategy.ratios()[0]; slices]
        }
    };
    if ensemble.mean_photon() == 0.0 {
        let strategy = Strategy::sequential(seed)?;
        let p_error = error_probability(&strategy, ensemble, model)?;
        return Ok(OptimizationResult {
            strategy,
            p_error,
            iterations: 0,
            converged: true,
            objective_history: vec![p_error],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut starts = vec![seed];
    for _ in 0..config.restarts {
        starts.push((0..slices).map(|_| rng.gen_range(0.0..=config.r_max)).collect());
    }
    let eval = TreeEvaluator::new(ensemble, model);
    let runs: Vec<LocalRun> = starts
        .into_par_iter()
        .map(|s| sequential_local(&eval, s, config))
        .collect();

    // Seeded run first so that ties keep the seed's lineage.
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[best].value {
            best = i;
        }
    }
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let run = runs.into_iter().nth(best).expect("at least one start");
    let strategy = Strategy::sequential(run.ratios)?;
    let p_error = error_probability(&strategy, ensemble, model)?;
    Ok(OptimizationResult {
        strategy,
        p_error,
        iterations,
        converged: run.converged,
        objective_history: run.history,
    })
}

fn broadcast_to_slices(s: &Strategy, slices: usize) -> Result<Vec<f64>> {
    if s.slices() != slices {
        return Err(Error::ShapeMismatch {
            kind: s.kind().name(),
            slices,
            expected: s.kind().parameter_count(slices),
            actual: s.ratios().len(),
        });
    }
    match s.kind() {
        StrategyKind::NonOptimized | StrategyKind::Flat => Ok(vec![s.ratios()[0]; slices]),
        StrategyKind::Sequential => Ok(s.ratios().to_vec()),
        StrategyKind::Historical => Err(Error::InvalidParameter(
            "a historical schedule cannot seed a sequential search".into(),
        )),
    }
}

fn broadcast_to_nodes(s: &Strategy, slices: usize) -> Result<Vec<f64>> {
    if s.kind() == StrategyKind::Historical {
        if s.slices() != slices {
            return Err(Error::ShapeMismatch {
                kind: s.kind().name(),
                slices,
                expected: s.kind().parameter_count(slices),
                actual: s.ratios().len(),
            });
        }
        return Ok(s.ratios().to_vec());
    }
    let per_slice = broadcast_to_slices(s, slices)?;
    let mut nodes = Vec::with_capacity((1 << slices) - 1);
    for (depth, r) in per_slice.iter().enumerate() {
        nodes.extend(std::iter::repeat_n(*r, 1 << depth));
    }
    Ok(nodes)
}

/// Optimizes one ratio per node of the history tree (`2^N − 1` parameters).
pub fn optimize_historical(
    ensemble: &StateEnsemble,
    model: &SystemModel,
    config: &OptimizerConfig,
    seed_strategy: Option<&Strategy>,
) -> Result<OptimizationResult> {
    config.validate()?;
    let slices = model.slices();
    if slices > config.historical_cap {
        return Err(Error::DimensionCap {
            slices,
            cap: config.historical_cap,
        });
    }
    let mut ratios = match seed_strategy {
        Some(s) => broadcast_to_nodes(s, slices)?,
        None => {
            let seq = optimize_sequential(ensemble, model, config, None)?;
            broadcast_to_nodes(&seq.strategy, slices)?
        }
    };
    let eval = TreeEvaluator::new(ensemble, model);
    let m = ensemble.m();
    let priors = ensemble.priors();
    let mut value = 1.0 - eval.success(&Schedule::Historical(&ratios));
    let mut history = vec![value];
    let mut sweeps = 0;
    let mut converged = ensemble.mean_photon() == 0.0;
    let mut scratch = eval.scratch();
    let mut incoming = vec![0.0; m];

    while !converged && sweeps < config.max_cycles {
        sweeps += 1;
        let before = value;
        // Heap order is breadth-first.
        for node in 0..ratios.len() {
            let depth = usize::BITS as usize - 1 - (node + 1).leading_zeros() as usize;
            eval.node_likelihood(&Schedule::Historical(&ratios), node, &mut incoming);
            let reach: f64 = priors.iter().zip(&incoming).map(|(p, l)| p * l).sum();
            if !(reach > 0.0) {
                continue;
            }
            let subtree = |r: f64, ratios: &mut Vec<f64>, scratch: &mut [f64]| {
                ratios[node] = r;
                scratch[..m].copy_from_slice(&incoming);
                -eval.subtree_value(&Schedule::Historical(ratios), scratch, depth, node)
            };
            let current = ratios[node];
            let old = subtree(current, &mut ratios, &mut scratch);
            let mut f = |r: f64| subtree(r, &mut ratios, &mut scratch);
            let found = scan_and_refine(&mut f, 0.0, config.r_max, config.coordinate_grid, config.ratio_tolerance);
            ratios[node] = if found.f < old { found.x } else { current };
        }
        let after = 1.0 - eval.success(&Schedule::Historical(&ratios));
        if after < value {
            value = after;
            push_monotone(&mut history, value);
        }
        if before - value < config.cycle_tolerance {
            converged = true;
        }
    }

    let strategy = Strategy::historical(slices, ratios)?;
    let p_error = error_probability(&strategy, ensemble, model)?;
    Ok(OptimizationResult {
        strategy,
        p_error,
        iterations: sweeps,
        converged,
        objective_history: history,
    })
}

/// Optimizes `kind`, chaining flat → sequential → historical seeds.
pub fn optimize_kind(
    kind: StrategyKind,
    ensemble: &StateEnsemble,
    model: &SystemModel,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    match kind {
        StrategyKind::NonOptimized => {
            let strategy = crate::receiver::non_optimized_strategy(model.slices())?;
            let p_error = error_probability(&strategy, ensemble, model)?;
            Ok(OptimizationResult {
                strategy,
                p_error,
                iterations: 0,
                converged: true,
                objective_history: vec![p_error],
            })
        }
        StrategyKind::Flat => optimize_flat(ensemble, model, config),
        StrategyKind::Sequential => optimize_sequential(ensemble, model, config, None),
        StrategyKind::Historical => optimize_historical(ensemble, model, config, None),
    }
}

/// Optimizes every kind in `kinds`, seeding sequential from flat and historical from
/// sequential so that the results nest. Results come back in the order of `kinds`.
pub fn optimize_chain(
    kinds: &[StrategyKind],
    ensemble: &StateEnsemble,
    model: &SystemModel,
    config: &OptimizerConfig,
) -> Result<Vec<OptimizationResult>> {
    let wants = |k: StrategyKind| kinds.contains(&k);
    let need_seq = wants(StrategyKind::Sequential) || wants(StrategyKind::Historical);
    let need_flat = wants(StrategyKind::Flat) || need_seq;
    let non = if wants(StrategyKind::NonOptimized) {
        Some(optimize_kind(StrategyKind::NonOptimized, ensemble, model, config)?)
    } else {
        None
    };
    let flat = if need_flat {
        Some(optimize_flat(ensemble, model, config)?)
    } else {
        None
    };
    let seq = match (&flat, need_seq) {
        (Some(f), true) => Some(optimize_sequential(ensemble, model, config, Some(&f.strategy))?),
        _ => None,
    };
    let hist = match (&seq, wants(StrategyKind::Historical)) {
        (Some(s), true) => Some(optimize_historical(ensemble, model, config, Some(&s.strategy))?),
        _ => None,
    };
    Ok(kinds
        .iter()
        .map(|k| {
            match k {
                StrategyKind::NonOptimized => &non,
                StrategyKind::Flat => &flat,
                StrategyKind::Sequential => &seq,
                StrategyKind::Historical => &hist,
            }
            .clone()
            .expect("requested kind was optimized")
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::make_mpsk_ensemble;
    use crate::receiver::non_optimized_strategy;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let mut f = |x: f64| (x - 1.234).powi(2);
        let found = scan_and_refine(&mut f, 0.0, 5.0, 16, 1e-8);
        assert!((found.x - 1.234).abs() < 1e-7);
        assert!(found.converged);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v) = nelder_mead(f, &[0.2, 0.3], 0.0, 3.0, 10_000, 1e-16);
        assert!(v < 1e-8, "{v} at {x:?}");
    }

    #[test]
    fn vacuum_is_trivial() {
        let e = make_mpsk_ensemble(4, 0.0, None).unwrap();
        let s = SystemModel::ideal(4).unwrap();
        let c = OptimizerConfig::default();
        assert!((optimize_flat(&e, &s, &c).unwrap().p_error - 0.75).abs() < 1e-15);
        let seq = optimize_sequential(&e, &s, &c, None).unwrap();
        assert!((seq.p_error - 0.75).abs() < 1e-15);
        assert_eq!(seq.iterations, 0);
        let hist = optimize_historical(&e, &s, &c, None).unwrap();
        assert!((hist.p_error - 0.75).abs() < 1e-15);
        assert_eq!(hist.strategy.ratios().len(), 15);
    }

    #[test]
    fn chain_is_monotone_small() {
        let e = make_mpsk_ensemble(4, 1.0, None).unwrap();
        let s = SystemModel::ideal(4).unwrap();
        let c = OptimizerConfig::default();
        let non = error_probability(&non_optimized_strategy(4).unwrap(), &e, &s).unwrap();
        let flat = optimize_flat(&e, &s, &c).unwrap();
        let seq = optimize_sequential(&e, &s, &c, Some(&flat.strategy)).unwrap();
        let hist = optimize_historical(&e, &s, &c, Some(&seq.strategy)).unwrap();
        assert!(flat.p_error <= non + 1e-12);
        assert!(seq.p_error <= flat.p_error + 1e-12);
        assert!(hist.p_error <= seq.p_error + 1e-12);
        for r in [&flat, &seq, &hist] {
            assert!(r.objective_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn cap_and_seed_shape_errors() {
        let e = make_mpsk_ensemble(4, 1.0, None).unwrap();
        let s = SystemModel::ideal(11).unwrap();
        let c = OptimizerConfig::default();
        let seed = Strategy::flat(11, 1.0).unwrap();
        assert!(matches!(
            optimize_historical(&e, &s, &c, Some(&seed)),
            Err(Error::DimensionCap { slices: 11, cap: 10 })
        ));
        let s4 = SystemModel::ideal(4).unwrap();
        assert!(optimize_sequential(&e, &s4, &c, Some(&Strategy::flat(3, 1.0).unwrap())).is_err());
        assert!(optimize_flat(&e, &s4, &OptimizerConfig::with_r_max(0.0)).is_err());
    }
}
