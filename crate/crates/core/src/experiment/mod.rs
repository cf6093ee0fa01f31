//! End-to-end runs: configuration, the controller that ties routing,
//! discovery, scheduling and export together, metrics and parameter sweeps.

mod config;
mod metrics;
mod runner;
mod sweep;

pub use config::{ConfigError, ExperimentConfig, SchedulerKind, Strategy, DEFAULT_EPOCH_UNIX_S};
pub use metrics::{gini, to_csv_string, write_csv, MetricsSample, CSV_HEADER};
pub use runner::{
    build_topology, run, select_obs, DiscoverySetup, FlowAccount, FlowareController, RunOutput, RunSummary,
    TIMER_DISCOVERY, TIMER_SAMPLE,
};
pub use sweep::{error_threshold, sweep, write_sweep_csv, Dimension, SweepRow, SWEEP_CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] crate::topology::TopologyError),
    #[error(transparent)]
    Workload(#[from] crate::workload::WorkloadError),
    #[error(transparent)]
    Assignment(#[from] crate::assignment::AssignmentError),
    #[error("cannot open export sink: {0}")]
    Sink(#[source] std::io::Error),
}
