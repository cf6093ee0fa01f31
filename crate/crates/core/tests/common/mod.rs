#![allow(dead_code)]

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use floware::discovery::AggregatedFlow;
use floware::sim::{Action, FlowEntry, FlowKey, FlowTable, Origin, SimTime};
use floware::{Ipv4Prefix, SwitchId, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn ip(s: &str) -> Ipv4Addr {
    s.parse().unwrap()
}

pub fn prefix(s: &str) -> Ipv4Prefix {
    s.parse().unwrap()
}

/// A random small topology together with the roles used to build it.
pub struct RandomNet {
    pub topology: Topology,
    pub sources: BTreeSet<u32>,
    pub destinations: BTreeSet<u32>,
    pub subnets: Vec<(u32, Ipv4Prefix)>,
    pub obs: BTreeSet<SwitchId>,
}

/// Up to `max_switches` switches on a random spanning tree plus extra links,
/// up to two subnets per switch, random source/destination roles and 1 to 3 OBSs.
pub fn random_net(seed: u64, max_switches: u32) -> RandomNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_switches);
    let mut text = String::new();
    for i in 1..=n {
        text += &format!("switch {i}\n");
    }
    let mut links = BTreeSet::new();
    for i in 2..=n {
        let p = rng.gen_range(1..i);
        links.insert((p, i));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        if a != b {
            links.insert((a.min(b), a.max(b)));
        }
    }
    for (a, b) in &links {
        text += &format!("link {a} {b}\n");
    }
    let mut subnets = Vec::new();
    let mut sources = BTreeSet::new();
    let mut destinations = BTreeSet::new();
    let mut block = 0u32;
    for i in 1..=n {
        let count = rng.gen_range(0..=2);
        for _ in 0..count {
            // Each subnet lives in its own /24 so lengths can vary freely.
            let len = rng.gen_range(24..=30u8);
            let net = Ipv4Prefix::new(Ipv4Addr::from(0x0A00_0000 + (block << 8)), len).unwrap();
            block += 1;
            text += &format!("subnet {i} {net}\n");
            subnets.push((i, net));
        }
        if count > 0 {
            match rng.gen_range(0..3) {
                0 => {
                    sources.insert(i);
                    text += &format!("source {i}\n");
                }
                1 => {
                    destinations.insert(i);
                    text += &format!("destination {i}\n");
                }
                _ => {
                    sources.insert(i);
                    destinations.insert(i);
                    text += &format!("endpoint {i}\n");
                }
            }
        }
    }
    let topology = Topology::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    let k = rng.gen_range(1..=3.min(n));
    let mut all: Vec<u32> = (1..=n).collect();
    let mut obs = BTreeSet::new();
    for _ in 0..k {
        let i = rng.gen_range(0..all.len());
        obs.insert(SwitchId(all.swap_remove(i)));
    }
    RandomNet {
        topology,
        sources,
        destinations,
        subnets,
        obs,
    }
}

/// Brute-force monitored set: every (source subnet, destination subnet) pair
/// whose route shares a switch with the OBS set.
pub fn monitored_oracle(net: &RandomNet) -> Vec<(AggregatedFlow, BTreeSet<SwitchId>)> {
    let mut out = Vec::new();
    for &(s, src) in &net.subnets {
        if !net.sources.contains(&s) {
            continue;
        }
        for &(d, dst) in &net.subnets {
            if !net.destinations.contains(&d) || src == dst {
                continue;
            }
            let route = net.topology.route(SwitchId(s), SwitchId(d));
            let hit: BTreeSet<SwitchId> = route.path().iter().filter(|x| net.obs.contains(x)).copied().collect();
            if !hit.is_empty() {
                out.push((
                    AggregatedFlow {
                        src_subnet: src,
                        dst_subnet: dst,
                        src_switch: SwitchId(s),
                        dst_switch: SwitchId(d),
                    },
                    hit,
                ));
            }
        }
    }
    out.sort();
    out
}

/// Random table of up to `max` entries over a small address pool so that
/// overlaps are common. Returns the entries in install order.
pub fn random_table(rng: &mut ChaCha8Rng, max: usize) -> (FlowTable, Vec<FlowEntry>) {
    let mut table = FlowTable::new(SwitchId(1), max);
    let mut installed = Vec::new();
    let n = rng.gen_range(0..=max);
    for i in 0..n {
        let key = FlowKey::new(random_prefix(rng), random_prefix(rng));
        let priority = [40u16, 49, 50][rng.gen_range(0..3)];
        let action = Action::Forward(floware::sim::NextHop::Local);
        let e = FlowEntry::new(key, priority, action, Origin::Routing);
        if table.install(e.clone(), SimTime::from_millis(i as u64 / 3)).is_ok() {
            installed.push(e);
        }
    }
    (table, installed)
}

pub fn random_prefix(rng: &mut ChaCha8Rng) -> Ipv4Prefix {
    let len = [0u8, 24, 28, 30, 32][rng.gen_range(0..5)];
    let addr = Ipv4Addr::new(10, 0, rng.gen_range(0..2), rng.gen_range(0..16));
    Ipv4Prefix::truncate(addr, len).unwrap()
}

pub fn random_addr(rng: &mut ChaCha8Rng) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, rng.gen_range(0..2), rng.gen_range(0..16))
}

/// Exhaustive matching: every entry that matches, ranked by priority, then
/// specificity, then install order.
pub fn match_oracle(table: &FlowTable, src: Ipv4Addr, dst: Ipv4Addr) -> Option<FlowKey> {
    let mut best: Option<(u16, u8, usize, FlowKey)> = None;
    for (pos, (_, e)) in table.iter().enumerate() {
        let s = e.key.src;
        let d = e.key.dst;
        let m = |p: Ipv4Prefix, a: Ipv4Addr| {
            let mask = if p.len() == 0 { 0 } else { u32::MAX << (32 - u32::from(p.len())) };
            u32::from(a) & mask == u32::from(p.addr()) & mask
        };
        if !(m(s, src) && m(d, dst)) {
            continue;
        }
        let spec = s.len() + d.len();
        let better = match best {
            None => true,
            Some((bp, bs, bpos, _)) => (e.priority, spec) > (bp, bs) || ((e.priority, spec) == (bp, bs) && pos < bpos),
        };
        if better {
            best = Some((e.priority, spec, pos, e.key));
        }
    }
    best.map(|b| b.3)
}

/// Field-by-field reading of a v5 datagram, written against the wire layout
/// and independent of the crate's codec.
#[derive(Debug, PartialEq, Eq)]
pub struct RawV5 {
    pub version: u16,
    pub count: u16,
    pub sys_uptime: u32,
    pub unix_secs: u32,
    pub unix_nsecs: u32,
    pub flow_sequence: u32,
    pub engine_type: u8,
    pub engine_id: u8,
    pub sampling: u16,
    /// (src, dst, nexthop, input, output, pkts, octets, first, last, srcport, dstport, flags, prot, tos, src_as, dst_as, src_mask, dst_mask)
    pub records: Vec<[u64; 18]>,
}

pub fn raw_decode(b: &[u8]) -> RawV5 {
    let u16_at = |i: usize| u64::from(u16::from_be_bytes([b[i], b[i + 1]]));
    let u32_at = |i: usize| u64::from(u32::from_be_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]));
    let count = u16_at(2) as u16;
    assert_eq!(b.len(), 24 + 48 * usize::from(count));
    let records = (0..usize::from(count))
        .map(|k| {
            let o = 24 + 48 * k;
            assert_eq!(b[o + 36], 0, "pad1");
            assert_eq!(u16_at(o + 46), 0, "pad2");
            [
                u32_at(o),
                u32_at(o + 4),
                u32_at(o + 8),
                u16_at(o + 12),
                u16_at(o + 14),
                u32_at(o + 16),
                u32_at(o + 20),
                u32_at(o + 24),
                u32_at(o + 28),
                u16_at(o + 32),
                u16_at(o + 34),
                u64::from(b[o + 37]),
                u64::from(b[o + 38]),
                u64::from(b[o + 39]),
                u16_at(o + 40),
                u16_at(o + 42),
                u64::from(b[o + 44]),
                u64::from(b[o + 45]),
            ]
        })
        .collect();
    RawV5 {
        version: u16_at(0) as u16,
        count,
        sys_uptime: u32_at(4) as u32,
        unix_secs: u32_at(8) as u32,
        unix_nsecs: u32_at(12) as u32,
        flow_sequence: u32_at(16) as u32,
        engine_type: b[20],
        engine_id: b[21],
        sampling: u16_at(22) as u16,
        records,
    }
}

/// Two ICMP records from 10.0.0.1 <-> 10.0.0.12 at uptime 61 s, sequence 30.
pub fn golden() -> (Vec<floware::export::V5Record>, u32, floware::export::HeaderClock, Vec<u8>) {
    use floware::export::{HeaderClock, V5Record};
    let records = vec![
        V5Record {
            srcaddr: ip("10.0.0.1"),
            dstaddr: ip("10.0.0.12"),
            input: 1,
            output: 2,
            d_pkts: 60,
            d_octets: 5880,
            first: 1000,
            last: 60000,
            ..V5Record::default()
        },
        V5Record {
            srcaddr: ip("10.0.0.12"),
            dstaddr: ip("10.0.0.1"),
            input: 2,
            output: 1,
            d_pkts: 59,
            d_octets: 5782,
            first: 1500,
            last: 59500,
            ..V5Record::default()
        },
    ];
    let clock = HeaderClock {
        sys_uptime_ms: 61_000,
        unix_secs: 1_406_887_770,
        unix_nsecs: 0,
    };
    #[rustfmt::skip]
    let bytes = vec![
        // header
        0x00, 0x05, 0x00, 0x02,
        0x00, 0x00, 0xEE, 0x48,
        0x53, 0xDB, 0x67, 0x5A,
        0x00, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x00, 0x1E,
        0x04, 0x04, 0x00, 0x00,
        // record 1
        10, 0, 0, 1,
        10, 0, 0, 12,
        0, 0, 0, 0,
        0x00, 0x01, 0x00, 0x02,
        0x00, 0x00, 0x00, 0x3C,
        0x00, 0x00, 0x16, 0xF8,
        0x00, 0x00, 0x03, 0xE8,
        0x00, 0x00, 0xEA, 0x60,
        0x00, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x01, 0x00,
        0x00, 0x00, 0x00, 0x00,
        0x20, 0x20, 0x00, 0x00,
        // record 2
        10, 0, 0, 12,
        10, 0, 0, 1,
        0, 0, 0, 0,
        0x00, 0x02, 0x00, 0x01,
        0x00, 0x00, 0x00, 0x3B,
        0x00, 0x00, 0x16, 0x96,
        0x00, 0x00, 0x05, 0xDC,
        0x00, 0x00, 0xE8, 0x6C,
        0x00, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x01, 0x00,
        0x00, 0x00, 0x00, 0x00,
        0x20, 0x20, 0x00, 0x00,
    ];
    (records, 30, clock, bytes)
}

pub fn random_v5_record(rng: &mut ChaCha8Rng) -> floware::export::V5Record {
    floware::export::V5Record {
        srcaddr: Ipv4Addr::from(rng.gen::<u32>()),
        dstaddr: Ipv4Addr::from(rng.gen::<u32>()),
        nexthop: Ipv4Addr::from(rng.gen::<u32>()),
        input: rng.gen(),
        output: rng.gen(),
        d_pkts: rng.gen(),
        d_octets: rng.gen(),
        first: rng.gen(),
        last: rng.gen(),
        srcport: rng.gen(),
        dstport: rng.gen(),
        tcp_flags: rng.gen(),
        prot: rng.gen(),
        tos: rng.gen(),
        src_as: rng.gen(),
        dst_as: rng.gen(),
        src_mask: rng.gen_range(0..=32),
        dst_mask: rng.gen_range(0..=32),
    }
}
