use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::iter::Peekable;
use std::net::Ipv4Addr;
use std::sync::Arc;

use serde::Serialize;

use super::log::EventLog;
use super::message::{FlowRemoved, FullTableError, Packet, PacketIn, PacketInReason};
use super::table::{Action, FlowEntry, FlowTable, InstallOutcome, Origin};
use super::SimTime;
use crate::topology::{Route, RouteTable, SwitchId, Topology};

/// What the switch does with a buffered packet once the controller has
/// answered its packet-in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resume {
    /// Look the packet up again at the same switch; a new entry is expected.
    Rematch,
    /// Send the packet to the next hop without a lookup.
    PacketOut,
    Drop,
}

/// Control application reacting to switch messages.
pub trait Controller {
    fn packet_in(&mut self, plane: &mut DataPlane, msg: &PacketIn) -> Resume;

    fn flow_removed(&mut self, plane: &mut DataPlane, msg: &FlowRemoved);

    /// Fired for tokens registered with [`Simulation::schedule_timer`].
    fn timer(&mut self, _plane: &mut DataPlane, _token: u64) {}
}

/// Cumulative data- and control-plane counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PlaneCounters {
    pub packets_injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub packet_outs: u64,
    pub packet_in_routing: u64,
    pub packet_in_monitoring: u64,
    pub packet_in_other: u64,
    pub flow_mods: u64,
    pub full_table_errors: u64,
    pub flow_removed: u64,
}

impl PlaneCounters {
    pub fn packet_ins(&self) -> u64 {
        self.packet_in_routing + self.packet_in_monitoring + self.packet_in_other
    }
}

/// Per exact flow bookkeeping used for conservation checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlowTally {
    pub generated: u64,
    pub packet_ins: u64,
}

/// Switch tables plus the controller's view of topology and routes.
#[derive(Debug)]
pub struct DataPlane {
    topology: Arc<Topology>,
    routes: Arc<RouteTable>,
    tables: BTreeMap<SwitchId, FlowTable>,
    host_switch: HashMap<Ipv4Addr, SwitchId>,
    counters: PlaneCounters,
    tallies: HashMap<(Ipv4Addr, Ipv4Addr), FlowTally>,
    log: EventLog,
    now: SimTime,
}

impl DataPlane {
    /// Every switch gets a table of `capacity` entries.
    pub fn new(topology: Arc<Topology>, capacity: usize) -> Self {
        let routes = Arc::new(RouteTable::new(&topology));
        let tables = topology.switches().map(|s| (s, FlowTable::new(s, capacity))).collect();
        let host_switch = topology
            .endpoints()
            .into_iter()
            .flat_map(|s| topology.hosts_of(s).iter().map(move |h| (*h, s)))
            .collect();
        Self {
            topology,
            routes,
            tables,
            host_switch,
            counters: PlaneCounters::default(),
            tallies: HashMap::new(),
            log: EventLog::default(),
            now: SimTime::ZERO,
        }
    }

    pub fn with_event_log(mut self, enabled: bool) -> Self {
        self.log = EventLog::new(enabled);
        self
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn table(&self, s: SwitchId) -> &FlowTable {
        &self.tables[&s]
    }

    pub fn table_mut(&mut self, s: SwitchId) -> &mut FlowTable {
        self.tables.get_mut(&s).expect("known switch")
    }

    pub fn tables(&self) -> impl Iterator<Item = &FlowTable> {
        self.tables.values()
    }

    pub fn counters(&self) -> &PlaneCounters {
        &self.counters
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn tallies(&self) -> &HashMap<(Ipv4Addr, Ipv4Addr), FlowTally> {
        &self.tallies
    }

    /// Free entries per switch, in switch order.
    pub fn free_entries(&self) -> BTreeMap<SwitchId, usize> {
        self.tables.iter().map(|(s, t)| (*s, t.free())).collect()
    }

    pub fn total_entries(&self) -> usize {
        self.tables.values().map(FlowTable::len).sum()
    }

    /// Endpoint switch of an active host.
    pub fn switch_of(&self, ip: Ipv4Addr) -> Option<SwitchId> {
        self.host_switch
            .get(&ip)
            .copied()
            .or_else(|| self.topology.switch_of(ip))
    }

    /// Route taken by packets from `src` to `dst`.
    pub fn route_between(&self, src: Ipv4Addr, dst: Ipv4Addr) -> Option<&Route> {
        let s = self.switch_of(src)?;
        let d = self.switch_of(dst)?;
        Some(self.routes.get(s, d))
    }

    pub fn route(&self, s: SwitchId, d: SwitchId) -> &Route {
        self.routes.get(s, d)
    }

    /// Sends a flow-mod to `switch` at the current time.
    pub fn flow_mod(&mut self, switch: SwitchId, entry: FlowEntry) -> Result<InstallOutcome, FullTableError> {
        self.counters.flow_mods += 1;
        let key = entry.key;
        let origin = entry.origin;
        let now = self.now;
        let result = self.table_mut(switch).install(entry, now);
        match &result {
            Ok(_) => self.log.push(now, "flow_mod", switch, &key, Some(origin), None),
            Err(_) => {
                self.counters.full_table_errors += 1;
                self.log.push(now, "full_table_error", switch, &key, Some(origin), None);
            }
        }
        result
    }
}

#[derive(Debug)]
enum Event {
    PacketIn(PacketIn),
    FlowRemoved(FlowRemoved),
    Timer(u64),
}

const CLASS_CONTROL: u8 = 1;
const CLASS_TIMER: u8 = 2;

#[derive(Debug)]
struct Queued {
    at: SimTime,
    class: u8,
    switch: SwitchId,
    seq: u64,
    event: Event,
}

impl Queued {
    fn key(&self) -> (SimTime, u8, SwitchId, u64) {
        (self.at, self.class, self.switch, self.seq)
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Discrete-event loop over a [`DataPlane`] and a [`Controller`].
///
/// At equal timestamps, expirations run first (switches in id order), then
/// control messages, then timers, then packet arrivals. Arrivals come from an
/// external iterator sorted by time.
pub struct Simulation<'a, C> {
    plane: DataPlane,
    controller: C,
    queue: BinaryHeap<Reverse<Queued>>,
    arrivals: Peekable<Box<dyn Iterator<Item = Packet> + 'a>>,
    latency_ms: u64,
    seq: u64,
}

impl<'a, C: Controller> Simulation<'a, C> {
    pub fn new(plane: DataPlane, controller: C) -> Self {
        let empty: Box<dyn Iterator<Item = Packet> + 'a> = Box::new(std::iter::empty());
        Self {
            plane,
            controller,
            queue: BinaryHeap::new(),
            arrivals: empty.peekable(),
            latency_ms: 0,
            seq: 0,
        }
    }

    /// Packet source; must yield packets in non-decreasing time order.
    pub fn with_arrivals(mut self, arrivals: impl Iterator<Item = Packet> + 'a) -> Self {
        let boxed: Box<dyn Iterator<Item = Packet> + 'a> = Box::new(arrivals);
        self.arrivals = boxed.peekable();
        self
    }

    /// One-way switch-to-controller delay; the controller's answer lands
    /// immediately after it processes a message.
    pub fn with_control_latency_ms(mut self, ms: u64) -> Self {
        self.latency_ms = ms;
        self
    }

    pub fn schedule_timer(&mut self, at: SimTime, token: u64) {
        self.push(at, CLASS_TIMER, SwitchId(0), Event::Timer(token));
    }

    pub fn plane(&self) -> &DataPlane {
        &self.plane
    }

    pub fn plane_mut(&mut self) -> &mut DataPlane {
        &mut self.plane
    }

    pub fn controller(&self) -> &C {
        &self.controller
    }

    pub fn controller_mut(&mut self) -> &mut C {
        &mut self.controller
    }

    pub fn into_parts(self) -> (DataPlane, C) {
        (self.plane, self.controller)
    }

    fn push(&mut self, at: SimTime, class: u8, switch: SwitchId, event: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Queued {
            at,
            class,
            switch,
            seq: self.seq,
            event,
        }));
    }

    /// Processes every event with timestamp `<= until` and returns the log.
    pub fn step(&mut self, until: SimTime) -> &EventLog {
        loop {
            let next_expiry = self.plane.tables.values().filter_map(FlowTable::next_deadline).min();
            let next_queued = self.queue.peek().map(|Reverse(q)| q.at);
            let next_arrival = self.arrivals.peek().map(|p| p.at);
            let next_other = match (next_queued, next_arrival) {
                (Some(q), Some(a)) => Some(q.min(a)),
                (q, a) => q.or(a),
            };
            if let Some(t) = next_expiry {
                if t <= until && next_other.map_or(true, |o| t <= o) {
                    self.expire_at(t);
                    continue;
                }
            }
            let Some(t) = next_other else { break };
            if t > until {
                break;
            }
            self.plane.now = t;
            if next_queued == Some(t) {
                let Reverse(q) = self.queue.pop().expect("peeked");
                self.dispatch(q.event);
            } else {
                let pkt = self.arrivals.next().expect("peeked");
                self.inject(pkt);
            }
        }
        self.plane.now = self.plane.now.max(until);
        &self.plane.log
    }

    fn expire_at(&mut self, t: SimTime) {
        self.plane.now = t;
        let mut removed = Vec::new();
        for table in self.plane.tables.values_mut() {
            removed.extend(table.expire(t));
        }
        for msg in removed {
            self.plane.counters.flow_removed += 1;
            self.plane.log.push(
                msg.at,
                "flow_removed",
                msg.switch,
                &msg.entry.key,
                Some(msg.entry.origin),
                Some(msg.entry.packets),
            );
            let at = t + self.latency_ms;
            let sw = msg.switch;
            self.push(at, CLASS_CONTROL, sw, Event::FlowRemoved(msg));
        }
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::PacketIn(msg) => {
                match self.controller.packet_in(&mut self.plane, &msg) {
                    Resume::Rematch => self.traverse(msg.packet, msg.hop, true),
                    Resume::PacketOut => {
                        self.plane.counters.packet_outs += 1;
                        self.traverse(msg.packet, msg.hop + 1, false)
                    }
                    Resume::Drop => self.plane.counters.dropped += 1,
                }
            }
            Event::FlowRemoved(msg) => self.controller.flow_removed(&mut self.plane, &msg),
            Event::Timer(token) => self.controller.timer(&mut self.plane, token),
        }
    }

    fn inject(&mut self, pkt: Packet) {
        self.plane.counters.packets_injected += 1;
        self.plane.tallies.entry((pkt.src, pkt.dst)).or_default().generated += 1;
        self.traverse(pkt, 0, false);
    }

    /// Walks `pkt` along its route from position `hop`. With `rematch`, the
    /// first lookup follows a controller answer: if it would trap the packet
    /// again, the packet is sent on without a second packet-in.
    fn traverse(&mut self, pkt: Packet, mut hop: usize, mut rematch: bool) {
        let routes = Arc::clone(&self.plane.routes);
        let (Some(s), Some(d)) = (self.plane.switch_of(pkt.src), self.plane.switch_of(pkt.dst)) else {
            self.plane.counters.dropped += 1;
            return;
        };
        let path = routes.get(s, d).path();
        let now = self.plane.now;
        while hop < path.len() {
            let sw = path[hop];
            let table = self.plane.tables.get_mut(&sw).expect("route switch");
            let found = table.peek(pkt.src, pkt.dst);
            let action = found.map(|id| table.entry(id).expect("live").action);
            match (found, action) {
                (Some(id), Some(Action::Forward(_))) => {
                    table.hit(id, u64::from(pkt.size), now);
                }
                (Some(id), Some(Action::Drop)) => {
                    table.hit(id, u64::from(pkt.size), now);
                    self.plane.counters.dropped += 1;
                    return;
                }
                _ if rematch => {
                    self.plane.counters.packet_outs += 1;
                }
                (Some(id), _) => {
                    let hit = table.hit(id, u64::from(pkt.size), now);
                    let reason = PacketInReason::Action {
                        origin: hit.origin,
                        key: hit.key,
                    };
                    self.emit_packet_in(sw, pkt, reason, hop);
                    return;
                }
                (None, _) => {
                    self.emit_packet_in(sw, pkt, PacketInReason::TableMiss, hop);
                    return;
                }
            }
            rematch = false;
            hop += 1;
        }
        self.plane.counters.delivered += 1;
    }

    fn emit_packet_in(&mut self, sw: SwitchId, pkt: Packet, reason: PacketInReason, hop: usize) {
        let c = &mut self.plane.counters;
        let key = match reason {
            PacketInReason::TableMiss => {
                c.packet_in_routing += 1;
                super::table::FlowKey::exact(pkt.src, pkt.dst)
            }
            PacketInReason::Action { origin, key } => {
                if origin == Origin::Discovery {
                    c.packet_in_monitoring += 1;
                } else {
                    c.packet_in_other += 1;
                }
                key
            }
        };
        self.plane.tallies.entry((pkt.src, pkt.dst)).or_default().packet_ins += 1;
        let origin = match reason {
            PacketInReason::TableMiss => None,
            PacketInReason::Action { origin, .. } => Some(origin),
        };
        self.plane.log.push(self.plane.now, "packet_in", sw, &key, origin, None);
        let msg = PacketIn {
            switch: sw,
            packet: pkt,
            reason,
            hop,
        };
        let at = self.plane.now + self.latency_ms;
        self.push(at, CLASS_CONTROL, sw, Event::PacketIn(msg));
    }
}
