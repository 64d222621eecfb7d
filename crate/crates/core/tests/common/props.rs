//! Property checks shared by the proptest suite and the acceptance runner.
#![allow(dead_code)]

use mpsk_receiver::{
    bayes_update, click_probability, displaced_mean, error_probability, evaluate_strategy, induced_channel,
    make_mpsk_ensemble, simulate_trials, BeliefState, ComplexAmplitude, ScheduleFile, SliceOutcome,
    SystemModel,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

#[derive(Debug, Clone)]
pub struct Case {
    pub m: usize,
    pub mean_photon: f64,
    pub priors: Vec<f64>,
    pub model: SystemModel,
    pub strategy: mpsk_receiver::Strategy,
}

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn priors(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..1.0, m).prop_map(normalized)
}

pub fn model(max_slices: usize) -> impl Strategy<Value = SystemModel> {
    (0.3f64..=1.0, 0.9f64..=1.0, 0.0f64..0.01, 1..=max_slices)
        .prop_map(|(e, v, d, n)| SystemModel::new(e, v, d, n).unwrap())
}

pub fn strategy_for(slices: usize) -> impl Strategy<Value = mpsk_receiver::Strategy> {
    let params = (1usize << slices) - 1;
    (0usize..4, prop::collection::vec(0.0f64..3.0, params)).prop_map(move |(kind, r)| match kind {
        0 => mpsk_receiver::non_optimized_strategy(slices).unwrap(),
        1 => mpsk_receiver::Strategy::flat(slices, r[0]).unwrap(),
        2 => mpsk_receiver::Strategy::sequential(r[..slices].to_vec()).unwrap(),
        _ => mpsk_receiver::Strategy::historical(slices, r).unwrap(),
    })
}

pub fn case(max_m: usize, max_slices: usize) -> impl Strategy<Value = Case> {
    (2..=max_m, 0.0f64..4.0, model(max_slices)).prop_flat_map(|(m, n, model)| {
        (priors(m), strategy_for(model.slices())).prop_map(move |(priors, strategy)| Case {
            m,
            mean_photon: n,
            priors,
            model,
            strategy,
        })
    })
}

pub fn update_input() -> impl Strategy<Value = (Vec<f64>, SystemModel, f64, f64, f64, bool)> {
    (2usize..=8).prop_flat_map(|m| {
        (
            priors(m),
            model(12),
            0.0f64..6.0,
            0.0f64..4.0,
            0.0f64..std::f64::consts::TAU,
            any::<bool>(),
        )
    })
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

/// Posterior is a probability vector after any admissible update.
pub fn belief_normalization(
    (priors, model, mean_photon, beta_mod, beta_arg, clicked): (Vec<f64>, SystemModel, f64, f64, f64, bool),
) -> Result<(), TestCaseError> {
    let m = priors.len();
    let e = make_mpsk_ensemble(m, mean_photon, Some(&priors)).unwrap();
    let prior = BeliefState::new(priors).unwrap();
    let beta = ComplexAmplitude::from_polar(beta_mod, beta_arg);
    match bayes_update(&prior, beta, SliceOutcome::from_clicked(clicked), &e, &model) {
        Ok(post) => {
            let sum: f64 = post.probs().iter().sum();
            ensure((sum - 1.0).abs() < 1e-12, format!("posterior sums to {sum}"))?;
            ensure(post.probs().iter().all(|p| *p >= 0.0 && p.is_finite()), "negative or non-finite entry")
        }
        // Every hypothesis assigned zero likelihood; only possible for a click with no light at all.
        Err(mpsk_receiver::Error::DegenerateEvidence) => ensure(clicked, "no-click outcome reported degenerate"),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

/// Sequential updates equal the prior times the product of per-slice likelihoods.
pub fn likelihood_factorization(c: Case, history_seed: u64) -> Result<(), TestCaseError> {
    let e = make_mpsk_ensemble(c.m, c.mean_photon, Some(&c.priors)).unwrap();
    let n = c.model.slices();
    let mut belief = BeliefState::new(c.priors.clone()).unwrap();
    let mut product = c.priors.clone();
    for slice in 0..n {
        let clicked = (history_seed >> slice) & 1 == 1;
        let beta = ComplexAmplitude::from_polar(0.3 + slice as f64 * 0.17, 0.9 * slice as f64);
        for (k, w) in product.iter_mut().enumerate() {
            let nbar = displaced_mean(e.amplitude(k), beta, c.model.visibility()).unwrap() / n as f64;
            let p = click_probability(nbar, &c.model);
            *w *= if clicked { p } else { 1.0 - p };
        }
        belief = match bayes_update(&belief, beta, SliceOutcome::from_clicked(clicked), &e, &c.model) {
            Ok(b) => b,
            Err(mpsk_receiver::Error::DegenerateEvidence) => return Ok(()),
            Err(err) => return Err(TestCaseError::fail(err.to_string())),
        };
    }
    let total: f64 = product.iter().sum();
    if total < 1e-200 {
        return Ok(());
    }
    for (k, (b, w)) in belief.probs().iter().zip(&product).enumerate() {
        let direct = w / total;
        ensure(
            (b - direct).abs() < 1e-10,
            format!("hypothesis {k}: sequential {b} vs product {direct}"),
        )?;
    }
    Ok(())
}

/// Leaf probabilities sum to one; correct mass equals `1 − P_e`.
pub fn leaf_conservation(c: Case) -> Result<(), TestCaseError> {
    let e = make_mpsk_ensemble(c.m, c.mean_photon, Some(&c.priors)).unwrap();
    let report = evaluate_strategy(&c.strategy, &e, &c.model).unwrap();
    ensure(report.per_history.len() == 1 << c.model.slices(), "history count")?;
    let total: f64 = report.per_history.iter().map(|h| h.probability).sum();
    ensure((total - 1.0).abs() < 1e-12, format!("leaf mass {total}"))?;
    let correct: f64 = report.per_history.iter().map(|h| h.correct_probability).sum();
    ensure(
        (1.0 - correct - report.p_error).abs() < 1e-12,
        format!("correct mass {correct} vs P_e {}", report.p_error),
    )?;
    for row in report.channel.rows() {
        let s: f64 = row.iter().sum();
        ensure((s - 1.0).abs() < 1e-12, format!("channel row sums to {s}"))?;
    }
    Ok(())
}

/// Rotating the priors by `shift` positions rotates the induced channel the same way
/// and leaves the error probability unchanged.
pub fn phase_covariance(c: Case, shift: usize) -> Result<(), TestCaseError> {
    let m = c.m;
    let s = shift % m;
    let mut rotated = vec![0.0; m];
    for (i, p) in c.priors.iter().enumerate() {
        rotated[(i + s) % m] = *p;
    }
    let e0 = make_mpsk_ensemble(m, c.mean_photon, Some(&c.priors)).unwrap();
    let e1 = make_mpsk_ensemble(m, c.mean_photon, Some(&rotated)).unwrap();
    let p0 = error_probability(&c.strategy, &e0, &c.model).unwrap();
    let p1 = error_probability(&c.strategy, &e1, &c.model).unwrap();
    ensure((p0 - p1).abs() < 1e-12, format!("P_e {p0} vs rotated {p1}"))?;
    let ch0 = induced_channel(&c.strategy, &e0, &c.model).unwrap();
    let ch1 = induced_channel(&c.strategy, &e1, &c.model).unwrap();
    for k in 0..m {
        for j in 0..m {
            let a = ch0.get(k, j);
            let b = ch1.get((k + s) % m, (j + s) % m);
            ensure((a - b).abs() < 1e-12, format!("channel[{k}][{j}] = {a}, rotated {b}"))?;
        }
    }
    Ok(())
}

/// Same seed gives identical batches, whatever the thread count.
pub fn seed_determinism(c: Case, trials: u64, seed: u64) -> Result<(), TestCaseError> {
    let e = make_mpsk_ensemble(c.m, c.mean_photon, Some(&c.priors)).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_trials(&c.strategy, &e, &c.model, trials, seed).unwrap())
    };
    let a = run(1);
    let b = run(3);
    ensure(a == b, format!("thread count changed the batch: {} vs {} errors", a.errors, b.errors))?;
    let again = simulate_trials(&c.strategy, &e, &c.model, trials, seed).unwrap();
    ensure(a == again, "rerun with the same seed differed")
}

/// Writing and reading a schedule reproduces the strategy and its error probability exactly.
pub fn schedule_round_trip(c: Case) -> Result<(), TestCaseError> {
    let e = make_mpsk_ensemble(c.m, c.mean_photon, Some(&c.priors)).unwrap();
    let p = error_probability(&c.strategy, &e, &c.model).unwrap();
    let file = ScheduleFile::new(&c.strategy, &e, &c.model, p);
    let back = ScheduleFile::from_json(&file.to_json().unwrap()).unwrap();
    ensure(back == file, "schedule file changed in transit")?;
    let strategy = back.strategy().unwrap();
    ensure(strategy == c.strategy, "strategy changed in transit")?;
    let ensemble = back.ensemble().unwrap();
    let again = error_probability(&strategy, &ensemble, &back.model).unwrap();
    ensure((again - back.p_error).abs() < 1e-10, format!("re-evaluated {again} vs recorded {}", back.p_error))
}
