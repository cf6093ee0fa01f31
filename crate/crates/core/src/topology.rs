//! Network graphs, endpoint subnets and deterministic shortest-path routes.
//!
//! A [`Topology`] is built either from the `tree(depth, fanout)` generator or
//! from a small line-oriented text format:
//!
//! ```text
//! # comment
//! switch 1
//! switch 2
//! link 1 2
//! subnet 2 10.0.0.0/28
//! endpoint 2          # source and destination
//! source 1            # source only
//! destination 1       # destination only
//! ```
//!
//! Routes are hop-count shortest paths; among equal-length candidates the
//! lexicographically smallest switch sequence wins.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prefix::{Ipv4Prefix, PrefixError, Subnet};

/// Identifier of a switch (a datapath).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SwitchId(pub u32);

impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Debug for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl SwitchId {
    /// Synthesized management address, `192.168.100.<id>`.
    pub fn management_ip(self) -> Ipv4Addr {
        Ipv4Addr::from(u32::from(Ipv4Addr::new(192, 168, 100, 0)).wrapping_add(self.0))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Prefix {
        line: usize,
        #[source]
        source: PrefixError,
    },
    #[error("link references unknown switch {0}")]
    UnknownSwitch(SwitchId),
    #[error("duplicate link {0}-{1}")]
    DuplicateLink(SwitchId, SwitchId),
    #[error("self-loop on {0}")]
    SelfLoop(SwitchId),
    #[error("graph is disconnected ({reachable} of {total} switches reachable)")]
    Disconnected { reachable: usize, total: usize },
    #[error("topology has no switches")]
    Empty,
    #[error("subnets {0} and {1} overlap")]
    OverlappingSubnets(Subnet, Subnet),
    #[error("endpoint {0} has no subnet")]
    EndpointWithoutSubnet(SwitchId),
    #[error("{hosts} hosts per switch exceed the 14 usable addresses of a /28")]
    TooManyHosts { hosts: usize },
    #[error("base address {0} is not aligned to a /28")]
    Misaligned(Ipv4Addr),
    #[error("address space exhausted after {0}")]
    AddressSpaceExhausted(Ipv4Addr),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unrecognised topology source `{0}`")]
    Source(String),
}

/// Where a topology comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySource {
    Tree { depth: u32, fanout: u32 },
    File(PathBuf),
}

impl FromStr for TopologySource {
    type Err = TopologyError;

    /// Accepts `tree(depth, fanout)` or a file path.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("tree(").and_then(|r| r.strip_suffix(')')) {
            let mut it = rest.split(',').map(|x| x.trim().parse::<u32>());
            return match (it.next(), it.next(), it.next()) {
                (Some(Ok(depth)), Some(Ok(fanout)), None) => Ok(Self::Tree { depth, fanout }),
                _ => Err(TopologyError::Source(s.to_string())),
            };
        }
        if s.is_empty() {
            return Err(TopologyError::Source(s.to_string()));
        }
        Ok(Self::File(PathBuf::from(s)))
    }
}

impl fmt::Display for TopologySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tree { depth, fanout } => write!(f, "tree({depth},{fanout})"),
            Self::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// A loop-free switch sequence from a source switch to a destination switch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Route {
    path: Vec<SwitchId>,
}

impl Route {
    pub fn src(&self) -> SwitchId {
        self.path[0]
    }

    pub fn dst(&self) -> SwitchId {
        *self.path.last().expect("route is never empty")
    }

    pub fn path(&self) -> &[SwitchId] {
        &self.path
    }

    /// Hop count plus one: the number of switches traversed.
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: SwitchId) -> bool {
        self.path.contains(&s)
    }

    /// The unordered switch set; all set algebra on routes uses this form.
    pub fn switch_set(&self) -> BTreeSet<SwitchId> {
        self.path.iter().copied().collect()
    }

    /// Next switch after `s`, or `None` when `s` is the last switch.
    pub fn next_after(&self, s: SwitchId) -> Option<SwitchId> {
        let i = self.path.iter().position(|x| *x == s)?;
        self.path.get(i + 1).copied()
    }

    pub fn previous_before(&self, s: SwitchId) -> Option<SwitchId> {
        let i = self.path.iter().position(|x| *x == s)?;
        i.checked_sub(1).map(|j| self.path[j])
    }
}

/// Switch graph with endpoint roles, subnets and active hosts.
#[derive(Debug, Clone, Default)]
pub struct Topology {
    adjacency: BTreeMap<SwitchId, BTreeSet<SwitchId>>,
    subnets: BTreeMap<SwitchId, Vec<Subnet>>,
    sources: BTreeSet<SwitchId>,
    destinations: BTreeSet<SwitchId>,
    hosts: BTreeMap<SwitchId, Vec<Ipv4Addr>>,
}

/// Builder used by the generators and the file parser.
#[derive(Debug, Default)]
pub struct TopologyBuilder {
    topo: Topology,
    links: BTreeSet<(SwitchId, SwitchId)>,
}

impl TopologyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn switch(&mut self, id: u32) -> &mut Self {
        self.topo.adjacency.entry(SwitchId(id)).or_default();
        self
    }

    pub fn link(&mut self, a: u32, b: u32) -> Result<&mut Self, TopologyError> {
        let (a, b) = (SwitchId(a), SwitchId(b));
        if a == b {
            return Err(TopologyError::SelfLoop(a));
        }
        for s in [a, b] {
            if !self.topo.adjacency.contains_key(&s) {
                return Err(TopologyError::UnknownSwitch(s));
            }
        }
        let key = (a.min(b), a.max(b));
        if !self.links.insert(key) {
            return Err(TopologyError::DuplicateLink(key.0, key.1));
        }
        self.topo.adjacency.get_mut(&a).unwrap().insert(b);
        self.topo.adjacency.get_mut(&b).unwrap().insert(a);
        Ok(self)
    }

    pub fn subnet(&mut self, id: u32, subnet: Subnet) -> Result<&mut Self, TopologyError> {
        let s = SwitchId(id);
        if !self.topo.adjacency.contains_key(&s) {
            return Err(TopologyError::UnknownSwitch(s));
        }
        self.topo.subnets.entry(s).or_default().push(subnet);
        Ok(self)
    }

    pub fn endpoint(&mut self, id: u32) -> Result<&mut Self, TopologyError> {
        self.source(id)?.destination(id)
    }

    pub fn source(&mut self, id: u32) -> Result<&mut Self, TopologyError> {
        let s = SwitchId(id);
        if !self.topo.adjacency.contains_key(&s) {
            return Err(TopologyError::UnknownSwitch(s));
        }
        self.topo.sources.insert(s);
        Ok(self)
    }

    pub fn destination(&mut self, id: u32) -> Result<&mut Self, TopologyError> {
        let s = SwitchId(id);
        if !self.topo.adjacency.contains_key(&s) {
            return Err(TopologyError::UnknownSwitch(s));
        }
        self.topo.destinations.insert(s);
        Ok(self)
    }

    /// Checks connectivity and subnet disjointness.
    pub fn build(self) -> Result<Topology, TopologyError> {
        let topo = self.topo;
        topo.check_graph()?;
        topo.check_subnets()?;
        Ok(topo)
    }
}

/// Loads a topology from a generator spec or a file.
pub fn load_topology(source: &TopologySource) -> Result<Topology, TopologyError> {
    match source {
        TopologySource::Tree { depth, fanout } => Topology::tree(*depth, *fanout),
        TopologySource::File(path) => Topology::from_file(path),
    }
}

impl Topology {
    /// Complete tree with switches numbered breadth-first from 1. Leaves are
    /// both sources and destinations.
    pub fn tree(depth: u32, fanout: u32) -> Result<Self, TopologyError> {
        let mut b = TopologyBuilder::new();
        b.switch(1);
        let mut level = vec![1u32];
        let mut next_id = 2u32;
        for _ in 0..depth {
            let mut next_level = Vec::with_capacity(level.len() * fanout as usize);
            for &parent in &level {
                for _ in 0..fanout {
                    b.switch(next_id);
                    b.link(parent, next_id)?;
                    next_level.push(next_id);
                    next_id += 1;
                }
            }
            if next_level.is_empty() {
                break;
            }
            level = next_level;
        }
        for leaf in level {
            b.endpoint(leaf)?;
        }
        b.build()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the text format described in the module docs.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut b = TopologyBuilder::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let id = |w: &str| -> Result<u32, TopologyError> {
                w.parse().map_err(|_| TopologyError::Parse {
                    line,
                    msg: format!("bad switch id `{w}`"),
                })
            };
            let arity = |n: usize| -> Result<(), TopologyError> {
                if words.len() == n + 1 {
                    Ok(())
                } else {
                    Err(TopologyError::Parse {
                        line,
                        msg: format!("`{}` takes {n} argument(s)", words[0]),
                    })
                }
            };
            match words[0] {
                "switch" => {
                    arity(1)?;
                    b.switch(id(words[1])?);
                }
                "link" => {
                    arity(2)?;
                    b.link(id(words[1])?, id(words[2])?)?;
                }
                "subnet" => {
                    arity(2)?;
                    let subnet: Subnet = words[2]
                        .parse()
                        .map_err(|source| TopologyError::Prefix { line, source })?;
                    b.subnet(id(words[1])?, subnet)?;
                }
                "endpoint" => {
                    arity(1)?;
                    b.endpoint(id(words[1])?)?;
                }
                "source" => {
                    arity(1)?;
                    b.source(id(words[1])?)?;
                }
                "destination" => {
                    arity(1)?;
                    b.destination(id(words[1])?)?;
                }
                other => {
                    return Err(TopologyError::Parse {
                        line,
                        msg: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        b.build()
    }

    fn check_graph(&self) -> Result<(), TopologyError> {
        let Some(&start) = self.adjacency.keys().next() else {
            return Err(TopologyError::Empty);
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[&u] {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        if seen.len() != self.adjacency.len() {
            return Err(TopologyError::Disconnected {
                reachable: seen.len(),
                total: self.adjacency.len(),
            });
        }
        Ok(())
    }

    fn check_subnets(&self) -> Result<(), TopologyError> {
        let all: Vec<Subnet> = self.subnets.values().flatten().copied().collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                if a.overlaps(b) {
                    return Err(TopologyError::OverlappingSubnets(*a, *b));
                }
            }
        }
        Ok(())
    }

    /// Checks every invariant, including that each endpoint owns a subnet.
    pub fn validate(&self) -> Result<(), TopologyError> {
        self.check_graph()?;
        self.check_subnets()?;
        for s in self.endpoints() {
            if self.subnets.get(&s).map_or(true, |v| v.is_empty()) {
                return Err(TopologyError::EndpointWithoutSubnet(s));
            }
        }
        Ok(())
    }

    /// Gives every endpoint without a subnet its own /28, carved sequentially
    /// from `base`, then marks the first `hosts_per_switch` usable addresses of
    /// each endpoint subnet as active hosts.
    pub fn attach_hosts(mut self, hosts_per_switch: usize, base: Ipv4Addr) -> Result<Self, TopologyError> {
        const LEN: u8 = 28;
        if hosts_per_switch > 14 {
            return Err(TopologyError::TooManyHosts {
                hosts: hosts_per_switch,
            });
        }
        if u32::from(base) & !crate::prefix::mask_of(LEN) != 0 {
            return Err(TopologyError::Misaligned(base));
        }
        let mut next = u64::from(u32::from(base));
        for s in self.endpoints() {
            let slot = self.subnets.entry(s).or_default();
            if !slot.is_empty() {
                continue;
            }
            if next > u64::from(u32::MAX) {
                return Err(TopologyError::AddressSpaceExhausted(base));
            }
            let subnet = Ipv4Prefix::new(Ipv4Addr::from(next as u32), LEN).expect("aligned /28");
            slot.push(subnet);
            next += 16;
        }
        self.check_subnets()?;
        self.hosts.clear();
        for s in self.endpoints() {
            let hosts: Vec<Ipv4Addr> = self.subnets[&s]
                .iter()
                .flat_map(|net| {
                    let n = (hosts_per_switch as u64).min(net.usable_hosts());
                    (0..n).filter_map(move |i| net.host_at(i))
                })
                .collect();
            self.hosts.insert(s, hosts);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn switches(&self) -> impl Iterator<Item = SwitchId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn switch_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn contains(&self, s: SwitchId) -> bool {
        self.adjacency.contains_key(&s)
    }

    pub fn neighbors(&self, s: SwitchId) -> impl Iterator<Item = SwitchId> + '_ {
        self.adjacency.get(&s).into_iter().flatten().copied()
    }

    /// Unordered links, smaller id first.
    pub fn links(&self) -> Vec<(SwitchId, SwitchId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    pub fn sources(&self) -> &BTreeSet<SwitchId> {
        &self.sources
    }

    pub fn destinations(&self) -> &BTreeSet<SwitchId> {
        &self.destinations
    }

    /// S ∪ T.
    pub fn endpoints(&self) -> BTreeSet<SwitchId> {
        self.sources.union(&self.destinations).copied().collect()
    }

    pub fn subnets_of(&self, s: SwitchId) -> &[Subnet] {
        self.subnets.get(&s).map_or(&[], |v| v.as_slice())
    }

    pub fn hosts_of(&self, s: SwitchId) -> &[Ipv4Addr] {
        self.hosts.get(&s).map_or(&[], |v| v.as_slice())
    }

    /// All active hosts in ascending address order.
    pub fn hosts(&self) -> Vec<Ipv4Addr> {
        let mut all: Vec<Ipv4Addr> = self.hosts.values().flatten().copied().collect();
        all.sort();
        all
    }

    /// Endpoint switch whose subnet contains `ip`.
    pub fn switch_of(&self, ip: Ipv4Addr) -> Option<SwitchId> {
        self.subnets
            .iter()
            .find(|(_, nets)| nets.iter().any(|n| n.contains(ip)))
            .map(|(&s, _)| s)
    }

    /// Hop-count shortest path from `s` to `d`, lexicographically smallest
    /// among ties.
    ///
    /// Panics when either switch is unknown.
    pub fn route(&self, s: SwitchId, d: SwitchId) -> Route {
        assert!(self.contains(s) && self.contains(d), "unknown switch in route({s}, {d})");
        let dist = self.distances_to(d);
        let mut path = vec![s];
        let mut cur = s;
        while cur != d {
            // Neighbours iterate in ascending order, so the first one that
            // moves one hop closer yields the lexicographic minimum.
            cur = self
                .neighbors(cur)
                .find(|v| dist.get(v) == Some(&(dist[&cur] - 1)))
                .expect("connected graph");
            path.push(cur);
        }
        Route { path }
    }

    fn distances_to(&self, d: SwitchId) -> HashMap<SwitchId, usize> {
        let mut dist = HashMap::from([(d, 0usize)]);
        let mut queue = VecDeque::from([d]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for v in self.neighbors(u) {
                dist.entry(v).or_insert_with(|| {
                    queue.push_back(v);
                    du + 1
                });
            }
        }
        dist
    }

    /// Port number on `at` facing `toward`. Port 1 is the local host port;
    /// inter-switch ports follow in ascending neighbour order.
    pub fn port(&self, at: SwitchId, toward: Option<SwitchId>) -> u16 {
        match toward {
            None => 1,
            Some(n) => self
                .neighbors(at)
                .position(|x| x == n)
                .map_or(0, |i| i as u16 + 2),
        }
    }
}

/// Precomputed routes between every ordered pair of switches.
#[derive(Debug, Clone)]
pub struct RouteTable {
    routes: HashMap<(SwitchId, SwitchId), Route>,
}

impl RouteTable {
    pub fn new(t: &Topology) -> Self {
        let switches: Vec<SwitchId> = t.switches().collect();
        let mut routes = HashMap::with_capacity(switches.len() * switches.len());
        for &s in &switches {
            for &d in &switches {
                routes.insert((s, d), t.route(s, d));
            }
        }
        Self { routes }
    }

    pub fn get(&self, s: SwitchId, d: SwitchId) -> &Route {
        &self.routes[&(s, d)]
    }
}
