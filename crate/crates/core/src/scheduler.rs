//! Active-flow entries: installation on discovery packet-ins, statistics
//! extraction on expiry, and reinstallation with a policy-chosen timeout.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::export::StatsRecord;
use crate::sim::{Action, DataPlane, FlowEntry, FlowKey, FlowRemoved, NextHop, Origin, PacketIn, ACTIVE_PRIORITY};
use crate::topology::SwitchId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("timeout must be at least 1 s")]
    ZeroTimeout,
    #[error("alpha must exceed 1, got {0}")]
    Alpha(f64),
    #[error("delta must be positive, got {0}")]
    Delta(f64),
    #[error("timeout bounds out of order: min {min}, initial {initial}, max {max}")]
    Bounds { min: u32, initial: u32, max: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePolicy {
    pub alpha: f64,
    pub delta: f64,
    pub min_s: u32,
    pub max_s: u32,
    pub initial_s: u32,
}

impl Default for AdaptivePolicy {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            delta: 0.5,
            min_s: 15,
            max_s: 120,
            initial_s: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeoutPolicy {
    Fixed(u32),
    Adaptive(AdaptivePolicy),
}

impl Default for TimeoutPolicy {
    fn default() -> Self {
        TimeoutPolicy::Fixed(60)
    }
}

impl TimeoutPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match *self {
            TimeoutPolicy::Fixed(0) => Err(PolicyError::ZeroTimeout),
            TimeoutPolicy::Fixed(_) => Ok(()),
            TimeoutPolicy::Adaptive(p) => {
                if !(p.alpha > 1.0) {
                    return Err(PolicyError::Alpha(p.alpha));
                }
                if !(p.delta > 0.0) {
                    return Err(PolicyError::Delta(p.delta));
                }
                if p.min_s == 0 {
                    return Err(PolicyError::ZeroTimeout);
                }
                if !(p.min_s <= p.initial_s && p.initial_s <= p.max_s) {
                    return Err(PolicyError::Bounds {
                        min: p.min_s,
                        initial: p.initial_s,
                        max: p.max_s,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn initial(&self) -> u32 {
        match *self {
            TimeoutPolicy::Fixed(t) => t,
            TimeoutPolicy::Adaptive(p) => p.initial_s,
        }
    }

    pub fn bounds(&self) -> (u32, u32) {
        match *self {
            TimeoutPolicy::Fixed(t) => (t, t),
            TimeoutPolicy::Adaptive(p) => (p.min_s, p.max_s),
        }
    }
}

const HISTORY_LEN: usize = 8;

/// Controller-side record of one host-pair flow.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveFlowState {
    pub key: FlowKey,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub home_switch: SwitchId,
    pub eligible_obs: BTreeSet<SwitchId>,
    pub current_timeout: u32,
    pub last_packets: u64,
    pub last_bytes: u64,
    /// Most recent (packets, bytes) per expiry, oldest first.
    pub history: VecDeque<(u64, u64)>,
    /// Whether an entry for this flow is believed to sit in the home table.
    pub installed: bool,
}

/// Timeout for the next installation of `state`'s entry.
pub fn next_timeout(p: &TimeoutPolicy, state: &ActiveFlowState) -> u32 {
    match *p {
        TimeoutPolicy::Fixed(t) => t,
        TimeoutPolicy::Adaptive(a) => {
            let n = state.history.len();
            if n < 2 {
                return state.current_timeout;
            }
            let now = state.history[n - 1].1 as f64;
            let prev = state.history[n - 2].1 as f64;
            let v = (now - prev).abs() / prev.max(1.0);
            let t = f64::from(state.current_timeout);
            let next = if v > a.delta {
                (t / a.alpha).max(f64::from(a.min_s))
            } else {
                (t * a.alpha).min(f64::from(a.max_s))
            };
            next.round() as u32
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SchedulerStats {
    pub installs: u64,
    pub reinstalls: u64,
    pub install_failures: u64,
    pub reinstall_failures: u64,
    /// Expiries with no traffic that were not reinstalled.
    pub retired: u64,
}

/// Outcome of a discovery packet-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveInstall {
    Installed,
    AlreadyInstalled,
    TableFull,
    /// The packet's route does not cross the trapping switch.
    Unroutable,
}

#[derive(Debug, Clone, Default)]
pub struct Scheduler {
    policy: TimeoutPolicy,
    flows: BTreeMap<FlowKey, ActiveFlowState>,
    stats: SchedulerStats,
}

impl Scheduler {
    pub fn new(policy: TimeoutPolicy) -> Self {
        Self {
            policy,
            flows: BTreeMap::new(),
            stats: SchedulerStats::default(),
        }
    }

    pub fn policy(&self) -> &TimeoutPolicy {
        &self.policy
    }

    pub fn stats(&self) -> &SchedulerStats {
        &self.stats
    }

    pub fn state(&self, key: &FlowKey) -> Option<&ActiveFlowState> {
        self.flows.get(key)
    }

    pub fn states(&self) -> impl Iterator<Item = &ActiveFlowState> {
        self.flows.values()
    }

    /// Exact-match entry for `state` with the given hard timeout.
    pub fn active_entry(plane: &DataPlane, state: &ActiveFlowState, timeout: u32) -> Option<FlowEntry> {
        let route = plane.route_between(state.src, state.dst)?;
        if !route.contains(state.home_switch) {
            return None;
        }
        let next = route.next_after(state.home_switch).map_or(NextHop::Local, NextHop::Switch);
        Some(
            FlowEntry::new(state.key, ACTIVE_PRIORITY, Action::Forward(next), Origin::Active)
                .with_hard_timeout(timeout)
                .notify(),
        )
    }

    /// Installs the active entry for a packet trapped by a discovery entry at
    /// `msg.switch`. `eligible_obs` are the OBSs of the aggregated flow.
    pub fn on_packet_in(&mut self, plane: &mut DataPlane, msg: &PacketIn, eligible_obs: &BTreeSet<SwitchId>) -> ActiveInstall {
        let pkt = msg.packet;
        let key = FlowKey::exact(pkt.src, pkt.dst);
        let initial = self.policy.initial();
        let state = self.flows.entry(key).or_insert_with(|| ActiveFlowState {
            key,
            src: pkt.src,
            dst: pkt.dst,
            home_switch: msg.switch,
            eligible_obs: eligible_obs.clone(),
            current_timeout: initial,
            last_packets: 0,
            last_bytes: 0,
            history: VecDeque::new(),
            installed: false,
        });
        if state.installed && plane.table(state.home_switch).get(&key, ACTIVE_PRIORITY).is_some() {
            return ActiveInstall::AlreadyInstalled;
        }
        let Some(entry) = Self::active_entry(plane, state, state.current_timeout) else {
            return ActiveInstall::Unroutable;
        };
        match plane.flow_mod(state.home_switch, entry) {
            Ok(_) => {
                state.installed = true;
                self.stats.installs += 1;
                ActiveInstall::Installed
            }
            Err(_) => {
                state.installed = false;
                self.stats.install_failures += 1;
                ActiveInstall::TableFull
            }
        }
    }

    /// Handles the expiry of an active entry: returns its statistics and
    /// reinstalls it at the home switch when it carried traffic.
    pub fn on_flow_removed(&mut self, plane: &mut DataPlane, msg: &FlowRemoved) -> Option<StatsRecord> {
        let e = &msg.entry;
        let state = self.flows.get_mut(&e.key)?;
        debug_assert_eq!(state.home_switch, msg.switch);
        state.installed = false;
        state.last_packets = e.packets;
        state.last_bytes = e.bytes;
        state.history.push_back((e.packets, e.bytes));
        if state.history.len() > HISTORY_LEN {
            state.history.pop_front();
        }

        let topo = plane.topology();
        let route = plane.route_between(state.src, state.dst);
        let prev = route.and_then(|r| r.previous_before(state.home_switch));
        let next = route.and_then(|r| r.next_after(state.home_switch));
        let record = StatsRecord {
            src_ip: state.src,
            dst_ip: state.dst,
            packets: e.packets,
            bytes: e.bytes,
            first: e.installed_at,
            last: if e.packets > 0 { e.last_matched_at } else { e.installed_at },
            home_switch: state.home_switch,
            eligible_obs: state.eligible_obs.clone(),
            input_port: topo.port(state.home_switch, prev),
            output_port: topo.port(state.home_switch, next),
        };

        if e.packets == 0 {
            self.stats.retired += 1;
            return Some(record);
        }
        let timeout = next_timeout(&self.policy, state);
        state.current_timeout = timeout;
        if let Some(entry) = Self::active_entry(plane, state, timeout) {
            match plane.flow_mod(state.home_switch, entry) {
                Ok(_) => {
                    state.installed = true;
                    self.stats.reinstalls += 1;
                }
                Err(_) => self.stats.reinstall_failures += 1,
            }
        }
        Some(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(timeout: u32, bytes: &[u64]) -> ActiveFlowState {
        ActiveFlowState {
            key: FlowKey::exact(Ipv4Addr::new(10, 0, 0, 1), Ipv4Addr::new(10, 0, 0, 4)),
            src: Ipv4Addr::new(10, 0, 0, 1),
            dst: Ipv4Addr::new(10, 0, 0, 4),
            home_switch: SwitchId(1),
            eligible_obs: BTreeSet::from([SwitchId(1)]),
            current_timeout: timeout,
            last_packets: 0,
            last_bytes: 0,
            history: bytes.iter().map(|b| (b / 98, *b)).collect(),
            installed: true,
        }
    }

    #[test]
    fn fixed_ignores_history() {
        let p = TimeoutPolicy::Fixed(60);
        assert_eq!(next_timeout(&p, &state(60, &[])), 60);
        assert_eq!(next_timeout(&p, &state(60, &[1, 100_000])), 60);
    }

    #[test]
    fn adaptive_examples() {
        let p = TimeoutPolicy::Adaptive(AdaptivePolicy::default());
        assert_eq!(next_timeout(&p, &state(60, &[1000, 1600])), 30);
        assert_eq!(next_timeout(&p, &state(60, &[1000, 1100])), 120);
        assert_eq!(next_timeout(&p, &state(60, &[1000])), 60);
        assert_eq!(next_timeout(&p, &state(15, &[1000, 5000])), 15);
        assert_eq!(next_timeout(&p, &state(120, &[1000, 1000])), 120);
    }

    #[test]
    fn policy_validation() {
        assert!(TimeoutPolicy::Fixed(0).validate().is_err());
        assert!(TimeoutPolicy::default().validate().is_ok());
        let bad = |f: fn(&mut AdaptivePolicy)| {
            let mut a = AdaptivePolicy::default();
            f(&mut a);
            TimeoutPolicy::Adaptive(a).validate().is_err()
        };
        assert!(bad(|a| a.alpha = 1.0));
        assert!(bad(|a| a.delta = 0.0));
        assert!(bad(|a| a.min_s = 200));
        assert!(bad(|a| a.initial_s = 10));
    }
}
