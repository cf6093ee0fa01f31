use std::fmt;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::export::{SinkSpec, SourceMode};
use crate::scheduler::{AdaptivePolicy, TimeoutPolicy};
use crate::topology::TopologySource;
use crate::workload::WorkloadSpec;

/// Unix time of the first exported datagram's clock: 2014-08-01 10:08:29 UTC.
pub const DEFAULT_EPOCH_UNIX_S: u64 = 1_406_887_709;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Balanced,
    Baseline,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Balanced, Strategy::Baseline];
}

impl FromStr for Strategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balanced" => Ok(Strategy::Balanced),
            "baseline" => Ok(Strategy::Baseline),
            _ => Err(ConfigError::Invalid(format!("unknown assignment `{s}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Balanced => "balanced",
            Strategy::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Fixed,
    Adaptive,
}

/// Everything a run needs. Deserialized from flat TOML keys; every key is
/// optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `tree(depth, fanout)` or a topology file path, relative to the config file.
    #[serde(with = "source_string")]
    pub topology: TopologySource,
    pub hosts_per_switch: usize,
    pub subnet_base: Ipv4Addr,
    /// Explicit OBS ids; overrides `obs_count`.
    pub obs: Option<Vec<u32>>,
    pub obs_count: usize,
    pub table_capacity: usize,
    pub assignment: Strategy,
    pub mu: f64,
    pub scheduler: SchedulerKind,
    pub fixed_timeout_s: u32,
    pub adaptive: AdaptivePolicy,
    pub cycle_s: u32,
    pub duration_s: u32,
    pub seed: u64,
    pub peers_per_host: usize,
    pub pkt_interval_s: f64,
    pub pkt_size: u32,
    pub export: SinkSpec,
    pub source_mode: SourceMode,
    pub sample_interval_s: u32,
    pub routing_idle_s: u32,
    /// Time at which discovery entries are installed; defaults to one cycle.
    pub learn_s: Option<u32>,
    pub control_latency_ms: u64,
    pub epoch_unix_s: u64,
    /// Keep a JSON-lines-able log of every control event.
    pub event_log: bool,
    /// Keep a copy of every exported datagram in the run output.
    pub capture_datagrams: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let w = WorkloadSpec::default();
        Self {
            topology: TopologySource::Tree { depth: 1, fanout: 10 },
            hosts_per_switch: 10,
            subnet_base: Ipv4Addr::new(10, 0, 0, 0),
            obs: None,
            obs_count: 1,
            table_capacity: 1000,
            assignment: Strategy::Balanced,
            mu: 0.05,
            scheduler: SchedulerKind::Fixed,
            fixed_timeout_s: 60,
            adaptive: AdaptivePolicy::default(),
            cycle_s: w.cycle_s,
            duration_s: w.duration_s,
            seed: w.seed,
            peers_per_host: w.peers_per_host,
            pkt_interval_s: w.pkt_interval_s,
            pkt_size: w.pkt_size,
            export: SinkSpec::None,
            source_mode: SourceMode::Transparent,
            sample_interval_s: 1,
            routing_idle_s: 5,
            learn_s: None,
            control_latency_ms: 0,
            epoch_unix_s: DEFAULT_EPOCH_UNIX_S,
            event_log: false,
            capture_datagrams: false,
        }
    }
}

mod source_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::topology::TopologySource;

    pub fn serialize<S: Serializer>(s: &TopologySource, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<TopologySource, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file. Relative topology paths resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let TopologySource::File(p) = &cfg.topology {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.topology = TopologySource::File(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn workload(&self) -> WorkloadSpec {
        WorkloadSpec {
            cycle_s: self.cycle_s,
            duration_s: self.duration_s,
            peers_per_host: self.peers_per_host,
            pkt_interval_s: self.pkt_interval_s,
            pkt_size: self.pkt_size,
            seed: self.seed,
        }
    }

    pub fn policy(&self) -> TimeoutPolicy {
        match self.scheduler {
            SchedulerKind::Fixed => TimeoutPolicy::Fixed(self.fixed_timeout_s),
            SchedulerKind::Adaptive => TimeoutPolicy::Adaptive(self.adaptive),
        }
    }

    pub fn learn_time_s(&self) -> u32 {
        self.learn_s.unwrap_or(self.cycle_s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.table_capacity == 0 {
            return bad("table_capacity must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return bad(format!("mu must lie in [0, 1], got {}", self.mu));
        }
        if self.cycle_s == 0 {
            return bad("cycle_s must be at least 1".into());
        }
        if self.sample_interval_s == 0 {
            return bad("sample_interval_s must be at least 1".into());
        }
        self.policy()
            .validate()
            .or_else(|e| bad(format!("scheduler: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::from_toml(
            r#"
topology = "tree(2, 3)"
table_capacity = 300
assignment = "baseline"
export = "udp:127.0.0.1:2055"
scheduler = "adaptive"
adaptive = { alpha = 3.0, delta = 0.2, min_s = 10, max_s = 90, initial_s = 30 }
"#,
        )
        .unwrap();
        assert_eq!(cfg.topology, TopologySource::Tree { depth: 2, fanout: 3 });
        assert_eq!(cfg.table_capacity, 300);
        assert_eq!(cfg.assignment, Strategy::Baseline);
        assert_eq!(cfg.hosts_per_switch, 10);
        assert_eq!(cfg.policy().initial(), 30);
        assert!(cfg.validate().is_ok());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml("tabel_capacity = 3").is_err());
        let cfg = ExperimentConfig {
            table_capacity: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            mu: 2.0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
