//! Aggregated-flow enumeration, monitored-flow selection and installation of
//! the static flow-discovery entries.
//!
//! An aggregated flow is a directed pair of endpoint subnets. A flow is
//! monitored when its route crosses at least one observed switch (OBS); its
//! discovery entry traps the first packet of every host pair inside the
//! aggregate and sends it to the controller.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assignment::Assignment;
use crate::prefix::Subnet;
use crate::sim::{Action, DataPlane, FlowEntry, FlowKey, FlowMod, Origin, DISCOVERY_PRIORITY};
use crate::topology::{Route, SwitchId, Topology};

/// A directed subnet pair `(IP_i, IP_j)` between two endpoint switches.
///
/// Ordered by subnet pair first, which is the lexicographic flow key used for
/// deterministic tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AggregatedFlow {
    pub src_subnet: Subnet,
    pub dst_subnet: Subnet,
    pub src_switch: SwitchId,
    pub dst_switch: SwitchId,
}

impl AggregatedFlow {
    pub fn key(&self) -> FlowKey {
        FlowKey::new(self.src_subnet, self.dst_subnet)
    }
}

pub type RouteMap = BTreeMap<AggregatedFlow, Route>;
pub type FlowToObs = BTreeMap<AggregatedFlow, BTreeSet<SwitchId>>;

/// All directed subnet pairs between sources and destinations, excluding a
/// subnet paired with itself.
pub fn enumerate_flows(t: &Topology) -> Vec<AggregatedFlow> {
    let mut flows = BTreeSet::new();
    for &s in t.sources() {
        for &d in t.destinations() {
            for &src_subnet in t.subnets_of(s) {
                for &dst_subnet in t.subnets_of(d) {
                    if src_subnet == dst_subnet {
                        continue;
                    }
                    flows.insert(AggregatedFlow {
                        src_subnet,
                        dst_subnet,
                        src_switch: s,
                        dst_switch: d,
                    });
                }
            }
        }
    }
    flows.into_iter().collect()
}

pub fn flow_routes(t: &Topology, flows: &[AggregatedFlow]) -> RouteMap {
    flows
        .iter()
        .map(|f| (*f, t.route(f.src_switch, f.dst_switch)))
        .collect()
}

/// Selection predicate: the observed switches on the route. A flow is
/// monitored iff this is non-empty.
pub fn observing_switches(route: &Route, obs: &BTreeSet<SwitchId>) -> BTreeSet<SwitchId> {
    route.path().iter().filter(|s| obs.contains(s)).copied().collect()
}

/// Keeps flows whose route crosses an OBS and records which OBSs each crosses.
pub fn select_monitored(
    flows: &[AggregatedFlow],
    routes: &RouteMap,
    obs: &BTreeSet<SwitchId>,
) -> (BTreeSet<AggregatedFlow>, FlowToObs) {
    let mut monitored = BTreeSet::new();
    let mut flow_to_obs = FlowToObs::new();
    for f in flows {
        let hit = observing_switches(&routes[f], obs);
        if !hit.is_empty() {
            monitored.insert(*f);
            flow_to_obs.insert(*f, hit);
        }
    }
    (monitored, flow_to_obs)
}

/// Picks `count` distinct switches uniformly at random.
pub fn random_obs(t: &Topology, count: usize, seed: u64) -> BTreeSet<SwitchId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    t.switches().choose_multiple(&mut rng, count).into_iter().collect()
}

/// Static discovery entry for `flow`: subnet-pair key, send to controller.
pub fn discovery_entry(flow: &AggregatedFlow) -> FlowEntry {
    FlowEntry::new(flow.key(), DISCOVERY_PRIORITY, Action::ToController, Origin::Discovery)
}

/// Monitored flows, their OBS sets, and where each discovery entry lives.
#[derive(Clone, Debug, Default)]
pub struct DiscoveryPlan {
    pub monitored: BTreeSet<AggregatedFlow>,
    pub flow_to_obs: FlowToObs,
    pub assignment: Assignment,
    by_key: BTreeMap<FlowKey, AggregatedFlow>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstallReport {
    pub installed: Vec<AggregatedFlow>,
    /// Flows left unmonitored because the assigned table was full.
    pub failed: Vec<AggregatedFlow>,
}

impl DiscoveryPlan {
    pub fn new(monitored: BTreeSet<AggregatedFlow>, flow_to_obs: FlowToObs, assignment: Assignment) -> Self {
        let by_key = monitored.iter().map(|f| (f.key(), *f)).collect();
        Self {
            monitored,
            flow_to_obs,
            assignment,
            by_key,
        }
    }

    pub fn flow_for_key(&self, key: &FlowKey) -> Option<&AggregatedFlow> {
        self.by_key.get(key)
    }

    /// One flow-mod per monitored flow, at its assigned switch.
    pub fn flow_mods(&self) -> Vec<FlowMod> {
        self.monitored
            .iter()
            .map(|f| FlowMod {
                switch: self.assignment.switch_for(f).expect("every monitored flow is assigned"),
                entry: discovery_entry(f),
            })
            .collect()
    }

    /// Sends every discovery flow-mod. Failures leave the flow unmonitored.
    pub fn install(&self, plane: &mut DataPlane) -> InstallReport {
        let mut report = InstallReport::default();
        for (flow, m) in self.monitored.iter().zip(self.flow_mods()) {
            match plane.flow_mod(m.switch, m.entry) {
                Ok(_) => report.installed.push(*flow),
                Err(_) => report.failed.push(*flow),
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Topology {
        Topology::parse(include_str!("../data/triangle.topo")).unwrap()
    }

    #[test]
    fn three_endpoints_six_flows() {
        let t = Topology::parse(
            "switch 1\nswitch 2\nswitch 3\nlink 1 2\nlink 2 3\nendpoint 1\nendpoint 2\nendpoint 3\n",
        )
        .unwrap()
        .attach_hosts(2, "10.0.0.0".parse().unwrap())
        .unwrap();
        assert_eq!(enumerate_flows(&t).len(), 6);
    }

    #[test]
    fn no_endpoints_no_flows() {
        let t = Topology::tree(0, 2).unwrap();
        let bare = Topology::parse("switch 1\n").unwrap();
        assert!(enumerate_flows(&bare).is_empty());
        // A lone tree root is its own leaf, hence an endpoint, but has no subnet yet.
        assert!(enumerate_flows(&t).is_empty());
    }

    #[test]
    fn triangle_monitors_four_of_five() {
        let t = triangle();
        let flows = enumerate_flows(&t);
        assert_eq!(flows.len(), 5);
        let routes = flow_routes(&t, &flows);
        let obs = BTreeSet::from([SwitchId(1)]);
        let (fd, map) = select_monitored(&flows, &routes, &obs);
        assert_eq!(fd.len(), 4);
        let skipped: Vec<_> = flows.iter().filter(|f| !fd.contains(f)).collect();
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].src_subnet.len(), 29);
        assert_eq!(skipped[0].dst_subnet.len(), 26);
        assert!(map.values().all(|o| o == &obs));
    }

    #[test]
    fn empty_and_full_obs() {
        let t = triangle();
        let flows = enumerate_flows(&t);
        let routes = flow_routes(&t, &flows);
        assert!(select_monitored(&flows, &routes, &BTreeSet::new()).0.is_empty());
        let all: BTreeSet<_> = t.switches().collect();
        assert_eq!(select_monitored(&flows, &routes, &all).0.len(), flows.len());
    }

    #[test]
    fn entry_shape() {
        let f = AggregatedFlow {
            src_subnet: "10.0.0.0/28".parse().unwrap(),
            dst_subnet: "10.0.1.0/28".parse().unwrap(),
            src_switch: SwitchId(1),
            dst_switch: SwitchId(2),
        };
        let e = discovery_entry(&f);
        assert_eq!(e.key.to_string(), "10.0.0.0/28>10.0.1.0/28");
        assert_eq!(e.priority, DISCOVERY_PRIORITY);
        assert_eq!(e.action, Action::ToController);
        assert!(e.is_static() && !e.notify_on_remove);
    }

    #[test]
    fn random_obs_is_seeded() {
        let t = Topology::tree(2, 3).unwrap();
        assert_eq!(random_obs(&t, 3, 9), random_obs(&t, 3, 9));
        assert_eq!(random_obs(&t, 3, 9).len(), 3);
    }
}
