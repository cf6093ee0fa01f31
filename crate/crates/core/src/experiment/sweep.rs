use std::fmt;
use std::io;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigError, ExperimentConfig, Strategy};
use super::runner::{run, RunSummary};
use super::ExperimentError;
use crate::export::SinkSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    TableCapacity,
    CycleS,
    ObsCount,
}

impl FromStr for Dimension {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table_capacity" | "table-size" => Ok(Dimension::TableCapacity),
            "cycle_s" | "cycle" => Ok(Dimension::CycleS),
            "obs_count" | "obs-count" => Ok(Dimension::ObsCount),
            _ => Err(ConfigError::Invalid(format!(
                "unknown sweep dimension `{s}`: expected table_capacity, cycle_s or obs_count"
            ))),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::TableCapacity => "table_capacity",
            Dimension::CycleS => "cycle_s",
            Dimension::ObsCount => "obs_count",
        })
    }
}

impl Dimension {
    pub fn apply(self, cfg: &mut ExperimentConfig, value: u64) {
        match self {
            Dimension::TableCapacity => cfg.table_capacity = value as usize,
            Dimension::CycleS => cfg.cycle_s = value as u32,
            Dimension::ObsCount => {
                cfg.obs = None;
                cfg.obs_count = value as usize;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dimension: Dimension,
    pub value: u64,
    pub summary: RunSummary,
}

pub const SWEEP_CSV_HEADER: [&str; 19] = [
    "dimension",
    "value",
    "assignment",
    "seed",
    "table_capacity",
    "cycle_s",
    "obs_count",
    "total_flow_entries",
    "gini_free",
    "packet_in_routing",
    "packet_in_monitoring",
    "packet_ins",
    "flow_removed",
    "full_table_errors",
    "flow_mods",
    "monitored_flows",
    "discovery_failures",
    "records_exported",
    "datagrams",
];

/// Runs every value under both strategies with the template's seed. Runs
/// execute in parallel; rows come back ordered by (value, strategy).
pub fn sweep(template: &ExperimentConfig, dimension: Dimension, values: &[u64]) -> Result<Vec<SweepRow>, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::Config(ConfigError::Invalid("sweep needs at least one value".into())));
    }
    let mut jobs = Vec::with_capacity(values.len() * 2);
    for &value in values {
        for strategy in Strategy::ALL {
            let mut cfg = template.clone();
            dimension.apply(&mut cfg, value);
            cfg.assignment = strategy;
            // Sweeps only keep summaries; datagrams would interleave in one sink.
            cfg.export = SinkSpec::None;
            cfg.event_log = false;
            cfg.capture_datagrams = false;
            jobs.push((value, cfg));
        }
    }
    jobs.into_par_iter()
        .map(|(value, cfg)| {
            run(&cfg).map(|out| SweepRow {
                dimension,
                value,
                summary: out.summary,
            })
        })
        .collect()
}

/// Smallest swept value at which `strategy` saw no full-table errors, for a
/// capacity sweep where larger values only help.
pub fn error_threshold(rows: &[SweepRow], strategy: Strategy) -> Option<u64> {
    rows.iter()
        .filter(|r| r.summary.assignment == strategy && r.summary.full_table_errors == 0)
        .map(|r| r.value)
        .min()
}

pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        out.serialize((r.dimension, r.value, &r.summary))?;
    }
    out.flush()?;
    Ok(())
}
