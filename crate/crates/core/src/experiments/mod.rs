//! Monte Carlo harness: phase transitions, RIP concentration, raster versus
//! sketched acquisition, and the few/many-measurement benchmark.

mod benchmark;
mod compare;
mod metrics;
mod phase;
mod rip;
mod trial;

pub use benchmark::{run_benchmark_figure, BenchmarkConfig, BenchmarkEntry, BenchmarkReport};
pub use compare::{compare_rs_vs_srop, CompareConfig, ComparisonRow};
pub use metrics::{relative_error, ssim, support};
pub use phase::{
    decrease_p_value, fit_scaling, monotonicity_violations, run_cell, run_phase_diagram,
    transition_point, CellResult, ScalingFit, Transition,
};
pub use rip::{rip_ratio, run_rip_study, RipConfig, RipReport};
pub use trial::{
    calibrate_epsilon, run_trial, sparse_phantom, EpsilonRule, TrialConfig, TrialOutcome,
};
