use super::engine::{DataPlane, Resume};
use super::message::{FullTableError, PacketIn};
use super::table::{Action, FlowEntry, FlowKey, InstallOutcome, NextHop, Origin, ROUTING_PRIORITY};
use crate::topology::{Route, SwitchId};

/// Reactive forwarding: on a table miss, install per-direction exact-match
/// entries on every switch of the route that lacks one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReactiveRouting {
    pub idle_timeout_s: u32,
    pub priority: u16,
}

impl Default for ReactiveRouting {
    fn default() -> Self {
        Self {
            idle_timeout_s: 5,
            priority: ROUTING_PRIORITY,
        }
    }
}

impl ReactiveRouting {
    pub fn new(idle_timeout_s: u32) -> Self {
        Self {
            idle_timeout_s,
            ..Self::default()
        }
    }

    /// The routing entries for `key` along `route`, one per switch.
    pub fn route_entries(&self, route: &Route, key: FlowKey) -> Vec<(SwitchId, FlowEntry)> {
        route
            .path()
            .iter()
            .map(|&s| {
                let next = route.next_after(s).map_or(NextHop::Local, NextHop::Switch);
                let entry = FlowEntry::new(key, self.priority, Action::Forward(next), Origin::Routing)
                    .with_idle_timeout(self.idle_timeout_s);
                (s, entry)
            })
            .collect()
    }

    /// Handles a table-miss packet-in. Returns the per-switch install results
    /// (switches that already hold the entry get no flow-mod) and how the
    /// buffered packet should continue.
    pub fn on_table_miss(
        &self,
        plane: &mut DataPlane,
        msg: &PacketIn,
    ) -> (Vec<(SwitchId, Result<InstallOutcome, FullTableError>)>, Resume) {
        let pkt = msg.packet;
        let Some(route) = plane.route_between(pkt.src, pkt.dst).cloned() else {
            return (Vec::new(), Resume::Drop);
        };
        let key = FlowKey::exact(pkt.src, pkt.dst);
        let mut results = Vec::new();
        for (s, entry) in self.route_entries(&route, key) {
            if plane.table(s).get(&key, self.priority).is_some() {
                continue;
            }
            results.push((s, plane.flow_mod(s, entry)));
        }
        let resume = if plane.table(msg.switch).get(&key, self.priority).is_some() {
            Resume::Rematch
        } else {
            Resume::PacketOut
        };
        (results, resume)
    }
}
