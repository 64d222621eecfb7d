use std::fs;
use std::path::{Path, PathBuf};

use mpsk_receiver::{
    evaluate_strategy, helstrom_mpsk, heterodyne_capacity, holevo_bound, induced_channel, make_mpsk_ensemble,
    mutual_information, optimize_chain, qnl_heterodyne, simulate_trials, ErrorReport, ScheduleFile, StrategyKind,
};
use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::dataset::{num, Dataset};
use crate::CliError;

/// Histories are tabulated only up to this many slices (4096 rows per schedule).
pub const MAX_HISTORY_SLICES: usize = 12;

fn optional(value: Option<f64>) -> String {
    value.map(num).unwrap_or_default()
}

fn qnl(m: usize, n: f64, efficiency: f64) -> Option<f64> {
    if m >= 3 && efficiency > 0.0 {
        qnl_heterodyne(m, n, efficiency).ok()
    } else {
        None
    }
}

/// Optimized schedules for every grid point and kind, in grid-then-kind order.
fn optimize_grid(cfg: &SweepConfig) -> Result<Vec<(usize, ScheduleFile, usize, bool)>, CliError> {
    let model = cfg.system_model()?;
    let opt = cfg.optimizer()?;
    let grid = cfg.mean_photon_grid();
    let per_point = grid
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let ensemble = make_mpsk_ensemble(cfg.m, n, None)?;
            let results = optimize_chain(&cfg.kinds, &ensemble, &model, &opt)?;
            Ok(results
                .into_iter()
                .map(|r| {
                    let file = ScheduleFile::new(&r.strategy, &ensemble, &model, r.p_error);
                    (i, file, r.iterations, r.converged)
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, mpsk_receiver::Error>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

fn schedule_name(kind: StrategyKind, index: usize) -> String {
    format!("{kind}-{index:03}")
}

pub fn optimize(cfg: &SweepConfig, out: &Path, emit_histories: bool) -> Result<(), CliError> {
    if emit_histories && cfg.slices > MAX_HISTORY_SLICES {
        return Err(CliError::config(format!(
            "--emit-histories is limited to N <= {MAX_HISTORY_SLICES}, got N = {}",
            cfg.slices
        )));
    }
    let schedules = optimize_grid(cfg)?;
    let schedule_dir = out.join("schedules");
    fs::create_dir_all(&schedule_dir).map_err(|e| CliError::io(format!("creating {}: {e}", schedule_dir.display())))?;
    let model = cfg.system_model()?;

    let mut ds = Dataset::new(&[
        "strategy_kind",
        "M",
        "N",
        "mean_photon",
        "efficiency",
        "visibility",
        "dark",
        "p_error",
        "qnl",
        "qnl_scaled",
        "helstrom",
        "iterations",
        "converged",
        "schedule",
    ]);
    for (i, file, iterations, converged) in &schedules {
        let name = schedule_name(file.kind, *i);
        let path = schedule_dir.join(format!("{name}.json"));
        file.write(&path)?;
        if emit_histories {
            let report = evaluate_strategy(&file.strategy()?, &file.ensemble()?, &model)?;
            write_histories(&out.join("histories"), &name, &report)?;
        }
        let n = file.mean_photon;
        ds.push(vec![
            file.kind.to_string(),
            cfg.m.to_string(),
            cfg.slices.to_string(),
            num(n),
            num(model.efficiency()),
            num(model.visibility()),
            num(model.dark_per_pulse()),
            num(file.p_error),
            optional(qnl(cfg.m, n, 1.0)),
            optional(qnl(cfg.m, n, model.efficiency())),
            num(helstrom_mpsk(cfg.m, n)?),
            iterations.to_string(),
            converged.to_string(),
            format!("schedules/{name}.json"),
        ]);
    }
    let path = ds.write(out, "optimize", "optimize", cfg)?;
    println!("wrote {} rows to {}", ds.len(), path.display());
    Ok(())
}

fn write_histories(dir: &Path, name: &str, report: &ErrorReport) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(CliError::from_csv)?;
    w.write_record(["history", "probability", "decided_state", "correct_probability"])
        .map_err(CliError::from_csv)?;
    for h in &report.per_history {
        w.write_record([
            h.history.to_string(),
            num(h.probability),
            h.decided_state.to_string(),
            num(h.correct_probability),
        ])
        .map_err(CliError::from_csv)?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))
}

pub fn bounds(cfg: &SweepConfig, out: &Path) -> Result<(), CliError> {
    let model = cfg.system_model()?;
    let grid = cfg.mean_photon_grid();
    let rows = grid
        .par_iter()
        .map(|&n| {
            Ok(vec![
                num(n),
                optional(qnl(cfg.m, n, 1.0)),
                optional(qnl(cfg.m, n, model.efficiency())),
                num(helstrom_mpsk(cfg.m, n)?),
                num(holevo_bound(n)?),
                num(heterodyne_capacity(n)?),
            ])
        })
        .collect::<Result<Vec<_>, mpsk_receiver::Error>>()?;
    let mut ds = Dataset::new(&["mean_photon", "qnl", "qnl_scaled", "helstrom", "holevo", "heterodyne_capacity"]);
    rows.into_iter().for_each(|r| ds.push(r));
    let path = ds.write(out, "bounds", "bounds", cfg)?;
    println!("wrote {} rows to {}", ds.len(), path.display());
    Ok(())
}

/// Schedules from files (checked against the config) or optimized on the fly.
fn schedule_sources(cfg: &SweepConfig, paths: &[PathBuf]) -> Result<Vec<ScheduleFile>, CliError> {
    let model = cfg.system_model()?;
    if paths.is_empty() {
        return Ok(optimize_grid(cfg)?.into_iter().map(|(_, f, _, _)| f).collect());
    }
    paths
        .iter()
        .map(|p| {
            let file = ScheduleFile::read(p).map_err(|e| match e {
                mpsk_receiver::Error::Io(io) => CliError::io(format!("reading {}: {io}", p.display())),
                other => CliError::config(format!("{}: {other}", p.display())),
            })?;
            file.check_compatible(cfg.m, &model)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            Ok(file)
        })
        .collect()
}

pub fn simulate(cfg: &SweepConfig, paths: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let trials = cfg
        .trials
        .ok_or_else(|| CliError::config("simulate needs `trials` in the config"))?;
    let sources = schedule_sources(cfg, paths)?;
    let mut ds = Dataset::new(&[
        "strategy_kind",
        "M",
        "N",
        "mean_photon",
        "efficiency",
        "visibility",
        "dark",
        "trials",
        "p_hat",
        "stderr",
        "seed",
        "run",
        "p_exact",
    ]);
    for file in &sources {
        let strategy = file.strategy()?;
        let ensemble = file.ensemble()?;
        let exact = mpsk_receiver::error_probability(&strategy, &ensemble, &file.model)?;
        for run in 0..cfg.runs {
            let seed = cfg.seed.wrapping_add(u64::from(run));
            let batch = simulate_trials(&strategy, &ensemble, &file.model, trials, seed)?;
            ds.push(vec![
                file.kind.to_string(),
                file.m.to_string(),
                file.slices.to_string(),
                num(file.mean_photon),
                num(file.model.efficiency()),
                num(file.model.visibility()),
                num(file.model.dark_per_pulse()),
                batch.trials.to_string(),
                num(batch.p_hat),
                num(batch.stderr),
                batch.seed.to_string(),
                run.to_string(),
                num(exact),
            ]);
        }
    }
    let path = ds.write(out, "simulate", "simulate", cfg)?;
    println!("wrote {} rows to {}", ds.len(), path.display());
    Ok(())
}

pub fn info(cfg: &SweepConfig, paths: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let sources = schedule_sources(cfg, paths)?;
    let rows = sources
        .par_iter()
        .map(|file| {
            let ensemble = file.ensemble()?;
            let channel = induced_channel(&file.strategy()?, &ensemble, &file.model)?;
            let uniform = vec![1.0 / file.m as f64; file.m];
            let bits = mutual_information(&channel, &uniform)?;
            Ok(vec![
                file.kind.to_string(),
                num(file.mean_photon),
                num(bits),
                num(heterodyne_capacity(file.mean_photon)?),
                num(holevo_bound(file.mean_photon)?),
                num(file.p_error),
            ])
        })
        .collect::<Result<Vec<_>, mpsk_receiver::Error>>()?;
    let mut ds = Dataset::new(&[
        "strategy_kind",
        "mean_photon",
        "bits",
        "heterodyne_capacity",
        "holevo",
        "p_error",
    ]);
    rows.into_iter().for_each(|r| ds.push(r));
    let path = ds.write(out, "info", "info", cfg)?;
    println!("wrote {} rows to {}", ds.len(), path.display());
    Ok(())
}
