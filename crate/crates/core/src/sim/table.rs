use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::net::Ipv4Addr;

use serde::Serialize;

use super::message::{FlowRemoved, FullTableError, RemovalReason};
use super::SimTime;
use crate::prefix::Ipv4Prefix;
use crate::topology::SwitchId;

/// Priority of reactive routing entries.
pub const ROUTING_PRIORITY: u16 = 40;
/// Priority of static flow-discovery entries.
pub const DISCOVERY_PRIORITY: u16 = 49;
/// Priority of exact-match active flow entries; shadows discovery entries.
pub const ACTIVE_PRIORITY: u16 = 50;

/// Match fields of an entry: masked source and destination addresses.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FlowKey {
    pub src: Ipv4Prefix,
    pub dst: Ipv4Prefix,
}

impl FlowKey {
    pub fn new(src: Ipv4Prefix, dst: Ipv4Prefix) -> Self {
        Self { src, dst }
    }

    /// Exact host-pair key (`src/32`, `dst/32`).
    pub fn exact(src: Ipv4Addr, dst: Ipv4Addr) -> Self {
        Self::new(Ipv4Prefix::host(src), Ipv4Prefix::host(dst))
    }

    pub fn matches(&self, src: Ipv4Addr, dst: Ipv4Addr) -> bool {
        self.src.contains(src) && self.dst.contains(dst)
    }

    /// Sum of both mask lengths; larger is a closer match.
    pub fn specificity(&self) -> u8 {
        self.src.len() + self.dst.len()
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.src, self.dst)
    }
}

impl fmt::Debug for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NextHop {
    Switch(SwitchId),
    /// Deliver to a locally attached host.
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward(NextHop),
    ToController,
    Drop,
}

/// Which part of the system installed an entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Routing,
    Discovery,
    Active,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowEntry {
    pub key: FlowKey,
    pub priority: u16,
    pub action: Action,
    pub origin: Origin,
    pub packets: u64,
    pub bytes: u64,
    pub installed_at: SimTime,
    pub last_matched_at: SimTime,
    /// Seconds; zero disables.
    pub hard_timeout: u32,
    /// Seconds; zero disables.
    pub idle_timeout: u32,
    pub notify_on_remove: bool,
}

impl FlowEntry {
    /// Static entry with zeroed counters, no timeouts and no removal flag.
    pub fn new(key: FlowKey, priority: u16, action: Action, origin: Origin) -> Self {
        Self {
            key,
            priority,
            action,
            origin,
            packets: 0,
            bytes: 0,
            installed_at: SimTime::ZERO,
            last_matched_at: SimTime::ZERO,
            hard_timeout: 0,
            idle_timeout: 0,
            notify_on_remove: false,
        }
    }

    pub fn with_hard_timeout(mut self, secs: u32) -> Self {
        self.hard_timeout = secs;
        self
    }

    pub fn with_idle_timeout(mut self, secs: u32) -> Self {
        self.idle_timeout = secs;
        self
    }

    pub fn notify(mut self) -> Self {
        self.notify_on_remove = true;
        self
    }

    pub fn is_static(&self) -> bool {
        self.hard_timeout == 0 && self.idle_timeout == 0
    }

    /// Earliest instant at which the entry expires, with the timeout that fires.
    pub fn deadline(&self) -> Option<(SimTime, RemovalReason)> {
        let hard = (self.hard_timeout > 0).then(|| (self.installed_at.plus_secs(self.hard_timeout), RemovalReason::HardTimeout));
        let idle = (self.idle_timeout > 0)
            .then(|| (self.last_matched_at.plus_secs(self.idle_timeout), RemovalReason::IdleTimeout));
        match (hard, idle) {
            (Some(h), Some(i)) => Some(if h.0 <= i.0 { h } else { i }),
            (h, i) => h.or(i),
        }
    }
}

/// Stable handle of an installed entry. Ids grow with installation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryId(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstallOutcome {
    Added,
    /// An entry with the same key and priority was overwritten; no slot consumed.
    Replaced,
}

/// Summary of the entry a packet matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hit {
    pub id: EntryId,
    pub key: FlowKey,
    pub priority: u16,
    pub action: Action,
    pub origin: Origin,
}

/// Capacity-bounded flow table with priority / closest-match lookup.
///
/// Lookup is a tuple-space search: entries are grouped by their
/// `(src_len, dst_len)` mask pair and each group is a hash on the masked
/// addresses, so a lookup costs one probe per distinct mask pair.
#[derive(Debug, Clone)]
pub struct FlowTable {
    switch: SwitchId,
    capacity: usize,
    entries: BTreeMap<EntryId, FlowEntry>,
    by_key: HashMap<(FlowKey, u16), EntryId>,
    tuples: BTreeMap<(u8, u8), HashMap<(u32, u32), Vec<EntryId>>>,
    deadlines: BinaryHeap<Reverse<(SimTime, EntryId)>>,
    next_id: u64,
    silent_removals: u64,
}

impl FlowTable {
    pub fn new(switch: SwitchId, capacity: usize) -> Self {
        Self {
            switch,
            capacity,
            entries: BTreeMap::new(),
            by_key: HashMap::new(),
            tuples: BTreeMap::new(),
            deadlines: BinaryHeap::new(),
            next_id: 0,
            silent_removals: 0,
        }
    }

    pub fn switch(&self) -> SwitchId {
        self.switch
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn free(&self) -> usize {
        self.capacity - self.entries.len()
    }

    /// Entries removed on expiry without a flow-removed message.
    pub fn silent_removals(&self) -> u64 {
        self.silent_removals
    }

    pub fn get(&self, key: &FlowKey, priority: u16) -> Option<&FlowEntry> {
        self.by_key.get(&(*key, priority)).map(|id| &self.entries[id])
    }

    pub fn entry(&self, id: EntryId) -> Option<&FlowEntry> {
        self.entries.get(&id)
    }

    /// Entries in installation order.
    pub fn iter(&self) -> impl Iterator<Item = (EntryId, &FlowEntry)> {
        self.entries.iter().map(|(id, e)| (*id, e))
    }

    /// Installs `entry` at `now`. Timestamps and counters are reset.
    pub fn install(&mut self, mut entry: FlowEntry, now: SimTime) -> Result<InstallOutcome, FullTableError> {
        entry.installed_at = now;
        entry.last_matched_at = now;
        entry.packets = 0;
        entry.bytes = 0;
        let outcome = if let Some(old) = self.by_key.get(&(entry.key, entry.priority)).copied() {
            self.detach(old);
            InstallOutcome::Replaced
        } else if self.entries.len() >= self.capacity {
            return Err(FullTableError {
                switch: self.switch,
                rejected: entry,
            });
        } else {
            InstallOutcome::Added
        };
        let id = EntryId(self.next_id);
        self.next_id += 1;
        let k = &entry.key;
        self.tuples
            .entry((k.src.len(), k.dst.len()))
            .or_default()
            .entry((k.src.network(), k.dst.network()))
            .or_default()
            .push(id);
        self.by_key.insert((entry.key, entry.priority), id);
        if let Some((t, _)) = entry.deadline() {
            self.deadlines.push(Reverse((t, id)));
        }
        self.entries.insert(id, entry);
        assert!(self.entries.len() <= self.capacity, "flow table over capacity");
        Ok(outcome)
    }

    fn detach(&mut self, id: EntryId) -> Option<FlowEntry> {
        let entry = self.entries.remove(&id)?;
        self.by_key.remove(&(entry.key, entry.priority));
        let k = &entry.key;
        let shape = (k.src.len(), k.dst.len());
        if let Some(group) = self.tuples.get_mut(&shape) {
            let cell = (k.src.network(), k.dst.network());
            if let Some(ids) = group.get_mut(&cell) {
                ids.retain(|x| *x != id);
                if ids.is_empty() {
                    group.remove(&cell);
                }
            }
            if group.is_empty() {
                self.tuples.remove(&shape);
            }
        }
        Some(entry)
    }

    /// Winning entry for a packet without touching counters: highest
    /// priority, then highest specificity, then oldest.
    pub fn peek(&self, src: Ipv4Addr, dst: Ipv4Addr) -> Option<EntryId> {
        let (s, d) = (u32::from(src), u32::from(dst));
        let mut best: Option<(&FlowEntry, EntryId)> = None;
        for (&(sl, dl), group) in &self.tuples {
            let cell = (s & crate::prefix::mask_of(sl), d & crate::prefix::mask_of(dl));
            let Some(ids) = group.get(&cell) else { continue };
            for &id in ids {
                let e = &self.entries[&id];
                let better = match best {
                    None => true,
                    Some((b, bid)) => precedence(e, id, b, bid) == Ordering::Greater,
                };
                if better {
                    best = Some((e, id));
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Records a matching packet on entry `id`.
    pub fn hit(&mut self, id: EntryId, bytes: u64, now: SimTime) -> Hit {
        let e = self.entries.get_mut(&id).expect("live entry");
        e.packets += 1;
        e.bytes += bytes;
        e.last_matched_at = e.last_matched_at.max(now);
        Hit {
            id,
            key: e.key,
            priority: e.priority,
            action: e.action,
            origin: e.origin,
        }
    }

    /// Looks up a packet and updates the winner's counters.
    pub fn lookup(&mut self, src: Ipv4Addr, dst: Ipv4Addr, bytes: u64, now: SimTime) -> Option<Hit> {
        let id = self.peek(src, dst)?;
        Some(self.hit(id, bytes, now))
    }

    /// Earliest pending deadline. May be stale (an idle entry that has since
    /// matched); [`expire`](Self::expire) then just reschedules it.
    pub fn next_deadline(&self) -> Option<SimTime> {
        self.deadlines.peek().map(|Reverse((t, _))| *t)
    }

    /// Removes every entry whose hard or idle timeout has elapsed at `now` and
    /// returns flow-removed messages for those carrying the removal flag.
    pub fn expire(&mut self, now: SimTime) -> Vec<FlowRemoved> {
        let mut removed = Vec::new();
        while let Some(&Reverse((t, id))) = self.deadlines.peek() {
            if t > now {
                break;
            }
            self.deadlines.pop();
            let Some(entry) = self.entries.get(&id) else { continue };
            let Some((actual, reason)) = entry.deadline() else { continue };
            if actual > now {
                self.deadlines.push(Reverse((actual, id)));
                continue;
            }
            let entry = self.detach(id).expect("live entry");
            if entry.notify_on_remove {
                removed.push(FlowRemoved {
                    switch: self.switch,
                    entry,
                    reason,
                    at: actual,
                });
            } else {
                self.silent_removals += 1;
            }
        }
        removed
    }
}

fn precedence(a: &FlowEntry, aid: EntryId, b: &FlowEntry, bid: EntryId) -> Ordering {
    a.priority
        .cmp(&b.priority)
        .then(a.key.specificity().cmp(&b.key.specificity()))
        .then(b.installed_at.cmp(&a.installed_at))
        .then(bid.cmp(&aid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Ipv4Prefix {
        s.parse().unwrap()
    }

    fn ip(s: &str) -> Ipv4Addr {
        s.parse().unwrap()
    }

    fn entry(src: &str, dst: &str, prio: u16) -> FlowEntry {
        FlowEntry::new(FlowKey::new(p(src), p(dst)), prio, Action::Forward(NextHop::Local), Origin::Routing)
    }

    #[test]
    fn highest_priority_wins() {
        let mut t = FlowTable::new(SwitchId(1), 10);
        t.install(entry("10.0.0.0/24", "10.0.1.0/24", 49), SimTime::ZERO).unwrap();
        t.install(entry("10.0.0.1/32", "10.0.1.1/32", 50), SimTime::ZERO).unwrap();
        let hit = t.lookup(ip("10.0.0.1"), ip("10.0.1.1"), 98, SimTime(5)).unwrap();
        assert_eq!(hit.priority, 50);
        let e = t.entry(hit.id).unwrap();
        assert_eq!((e.packets, e.bytes, e.last_matched_at), (1, 98, SimTime(5)));
    }

    #[test]
    fn empty_table_misses() {
        let mut t = FlowTable::new(SwitchId(1), 10);
        assert!(t.lookup(ip("1.2.3.4"), ip("5.6.7.8"), 1, SimTime::ZERO).is_none());
    }

    #[test]
    fn closest_match_breaks_priority_ties() {
        let mut t = FlowTable::new(SwitchId(1), 10);
        t.install(entry("10.0.0.0/24", "10.0.1.0/24", 49), SimTime::ZERO).unwrap();
        t.install(entry("10.0.0.0/28", "10.0.1.0/28", 49), SimTime::ZERO).unwrap();
        let hit = t.lookup(ip("10.0.0.1"), ip("10.0.1.1"), 1, SimTime::ZERO).unwrap();
        assert_eq!(hit.key.specificity(), 56);
    }

    #[test]
    fn capacity_and_replacement() {
        let mut t = FlowTable::new(SwitchId(1), 1);
        assert_eq!(t.install(entry("10.0.0.1/32", "10.0.0.2/32", 40), SimTime::ZERO), Ok(InstallOutcome::Added));
        assert_eq!(t.free(), 0);
        let err = t.install(entry("10.0.0.3/32", "10.0.0.2/32", 40), SimTime::ZERO).unwrap_err();
        assert_eq!(err.switch, SwitchId(1));
        assert_eq!(t.len(), 1);
        assert!(t.get(&FlowKey::exact(ip("10.0.0.1"), ip("10.0.0.2")), 40).is_some());
        t.lookup(ip("10.0.0.1"), ip("10.0.0.2"), 10, SimTime(1)).unwrap();
        assert_eq!(
            t.install(entry("10.0.0.1/32", "10.0.0.2/32", 40), SimTime(2)),
            Ok(InstallOutcome::Replaced)
        );
        let e = t.get(&FlowKey::exact(ip("10.0.0.1"), ip("10.0.0.2")), 40).unwrap();
        assert_eq!((e.packets, e.installed_at), (0, SimTime(2)));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn hard_timeout_reports_when_flagged() {
        let mut t = FlowTable::new(SwitchId(3), 10);
        let active = entry("10.0.0.1/32", "10.0.0.4/32", ACTIVE_PRIORITY).with_hard_timeout(60).notify();
        t.install(active, SimTime::ZERO).unwrap();
        assert!(t.expire(SimTime::from_millis(59_999)).is_empty());
        let removed = t.expire(SimTime::from_secs(60));
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].reason, RemovalReason::HardTimeout);
        assert_eq!(removed[0].switch, SwitchId(3));
        assert!(t.is_empty());
    }

    #[test]
    fn static_entries_never_expire() {
        let mut t = FlowTable::new(SwitchId(1), 10);
        t.install(entry("10.0.0.0/28", "10.0.0.16/28", DISCOVERY_PRIORITY), SimTime::ZERO)
            .unwrap();
        assert!(t.expire(SimTime::from_secs(1_000_000_000)).is_empty());
        assert_eq!(t.len(), 1);
        assert_eq!(t.next_deadline(), None);
    }

    #[test]
    fn idle_timeout_is_silent_without_flag_and_extends_on_match() {
        let mut t = FlowTable::new(SwitchId(1), 10);
        t.install(entry("10.0.0.1/32", "10.0.0.2/32", 40).with_idle_timeout(5), SimTime::ZERO)
            .unwrap();
        t.lookup(ip("10.0.0.1"), ip("10.0.0.2"), 1, SimTime::from_secs(3)).unwrap();
        assert!(t.expire(SimTime::from_secs(5)).is_empty());
        assert_eq!(t.len(), 1);
        assert!(t.expire(SimTime::from_secs(8)).is_empty());
        assert!(t.is_empty());
        assert_eq!(t.silent_removals(), 1);
    }
}
