//! Adaptive receivers for M-ary phase-shift-keyed coherent states.
//!
//! A receiver splits one optical pulse into `N` time slices. In every slice it
//! displaces the input field so that the currently most likely hypothesis is
//! (partially) nulled, records an on/off photodetection outcome, and updates a
//! Bayesian belief over the `M` candidate states. After the last slice the
//! hypothesis with the largest posterior is reported.
//!
//! The crate evaluates such receivers exactly by enumerating every detection
//! history ([`receiver`]), optimizes the displacement amplitudes
//! ([`optimizer`]), compares against the standard reference curves
//! ([`bounds`]), samples trials ([`montecarlo`]) and computes the mutual
//! information of the induced channel ([`infotheory`]).

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod infotheory;
pub mod montecarlo;
pub mod optimizer;
pub mod photodetection;
pub mod receiver;
pub mod schedule;

pub use bounds::{
    helstrom_mpsk, heterodyne_capacity, holevo_bound, qnl_heterodyne, BoundCurve, BoundKind,
};
pub use ensemble::{make_mpsk_ensemble, ComplexAmplitude, StateEnsemble, SystemConfig, SystemModel};
pub use error::{Error, Result};
pub use infotheory::{mutual_information, ChannelMatrix};
pub use montecarlo::{simulate_trials, TrialBatchResult};
pub use optimizer::{
    optimize_chain, optimize_flat, optimize_historical, optimize_kind, optimize_sequential, OptimizationResult,
    OptimizerConfig,
};
pub use photodetection::{
    bayes_update, click_probability, displaced_mean, photon_count_pmf, BeliefState, SliceOutcome,
};
pub use receiver::{
    error_probability, evaluate_strategy, induced_channel, map_phase, non_optimized_strategy, DetectionHistory,
    ErrorReport, HistoryRecord, Strategy, StrategyKind,
};
pub use schedule::ScheduleFile;
