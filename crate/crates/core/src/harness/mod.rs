//! Experiment configuration, periodic approximation runs and CSV reports.

pub mod commands;
pub mod config;
pub mod output;
pub mod run;
pub mod telescope;

pub use commands::{execute, Command, Outcome};
pub use config::{BaseConfig, CocycleConfig, CocycleSetup, ExperimentConfig};
pub use run::{
    approx_row, best_by_k, closed_points, mu_reference, points_for_k, run_multi, run_multi_with, run_theorem1,
    run_theorem1_with, run_theorem2, run_theorem2_with, ApproxReport, ApproxRow, BestByK, MuReference,
    PeriodicSample, RowSink, Shortfall, Source, UpperBound,
};
pub use telescope::{telescope_diagnostic, TelescopeReport};
