//! Seeded ping-cycle traffic.
//!
//! Time is split into cycles. At the start of each cycle every host picks
//! `peers_per_host` distinct random peers and pings them for the whole cycle.
//! A ping is modelled as one packet stream in each direction.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{Packet, SimTime};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("{hosts} hosts cannot each ping {peers} distinct peers")]
    TooFewHosts { hosts: usize, peers: usize },
    #[error("cycle length must be at least 1 s")]
    ZeroCycle,
    #[error("packet interval must be at least 1 ms, got {0} s")]
    Interval(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub cycle_s: u32,
    pub duration_s: u32,
    pub peers_per_host: usize,
    pub pkt_interval_s: f64,
    pub pkt_size: u32,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            cycle_s: 1,
            duration_s: 300,
            peers_per_host: 10,
            pkt_interval_s: 1.0,
            pkt_size: 98,
            seed: 1,
        }
    }
}

/// One cycle: the directed host pairs active in `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub start: SimTime,
    pub end: SimTime,
    pub flows: Vec<(Ipv4Addr, Ipv4Addr)>,
}

impl Cycle {
    fn send_times(&self, interval_ms: u64) -> impl Iterator<Item = SimTime> + '_ {
        (self.start.as_millis()..self.end.as_millis())
            .step_by(interval_ms as usize)
            .map(SimTime)
    }
}

/// The full arrival schedule. Packets are produced lazily in (time, source,
/// destination) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub cycles: Vec<Cycle>,
    pub interval_ms: u64,
    pub pkt_size: u32,
}

impl Schedule {
    pub fn packets(&self) -> impl Iterator<Item = Packet> + '_ {
        let size = self.pkt_size;
        self.cycles.iter().flat_map(move |c| {
            c.send_times(self.interval_ms).flat_map(move |at| {
                c.flows.iter().map(move |&(src, dst)| Packet { src, dst, size, at })
            })
        })
    }

    pub fn packet_count(&self) -> u64 {
        self.cycles
            .iter()
            .map(|c| c.send_times(self.interval_ms).count() as u64 * c.flows.len() as u64)
            .sum()
    }

    /// Packets generated per directed host pair.
    pub fn packets_per_flow(&self) -> BTreeMap<(Ipv4Addr, Ipv4Addr), u64> {
        let mut out = BTreeMap::new();
        for c in &self.cycles {
            let n = c.send_times(self.interval_ms).count() as u64;
            for f in &c.flows {
                *out.entry(*f).or_insert(0) += n;
            }
        }
        out
    }

    /// Distinct directed host pairs over the whole schedule.
    pub fn distinct_flows(&self) -> BTreeSet<(Ipv4Addr, Ipv4Addr)> {
        self.cycles.iter().flat_map(|c| c.flows.iter().copied()).collect()
    }
}

pub fn generate(t: &Topology, w: &WorkloadSpec) -> Result<Schedule, WorkloadError> {
    generate_for_hosts(&t.hosts(), w)
}

pub fn generate_for_hosts(hosts: &[Ipv4Addr], w: &WorkloadSpec) -> Result<Schedule, WorkloadError> {
    if w.cycle_s == 0 {
        return Err(WorkloadError::ZeroCycle);
    }
    let interval_ms = (w.pkt_interval_s * 1000.0).round();
    if !(interval_ms >= 1.0) {
        return Err(WorkloadError::Interval(w.pkt_interval_s));
    }
    let mut hosts = hosts.to_vec();
    hosts.sort();
    hosts.dedup();
    if hosts.len() < w.peers_per_host + 1 {
        return Err(WorkloadError::TooFewHosts {
            hosts: hosts.len(),
            peers: w.peers_per_host,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(w.seed);
    let duration_ms = u64::from(w.duration_s) * 1000;
    let cycle_ms = u64::from(w.cycle_s) * 1000;
    let mut cycles = Vec::new();
    let mut start = 0;
    while start < duration_ms {
        let end = (start + cycle_ms).min(duration_ms);
        let mut flows = BTreeSet::new();
        for (i, &h) in hosts.iter().enumerate() {
            for j in rand::seq::index::sample(&mut rng, hosts.len() - 1, w.peers_per_host) {
                let peer = hosts[if j >= i { j + 1 } else { j }];
                flows.insert((h, peer));
                flows.insert((peer, h));
            }
        }
        cycles.push(Cycle {
            start: SimTime(start),
            end: SimTime(end),
            flows: flows.into_iter().collect(),
        });
        start = end;
    }
    Ok(Schedule {
        cycles,
        interval_ms: interval_ms as u64,
        pkt_size: w.pkt_size,
    })
}
