//! End-to-end acceptance checks. Runs as a plain binary so every check prints
//! one PASS/FAIL line; exits non-zero if any check fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use floware::assignment::evaluate;
use floware::discovery::{enumerate_flows, flow_routes, select_monitored};
use floware::experiment::{run, ExperimentConfig, RunOutput, Strategy};
use floware::export::{build_datagram, read_length_prefixed, Datagram, HeaderClock, SinkSpec};
use floware::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        println!("{} {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Conservation and capacity, checked on every run this binary makes.
#[derive(Default)]
struct RunAudit {
    runs: usize,
    conservation: Vec<String>,
    capacity: Vec<String>,
}

impl RunAudit {
    fn add(&mut self, out: &RunOutput) {
        self.runs += 1;
        let tag = format!("{} seed {} cap {}", out.config.assignment, out.config.seed, out.capacity);
        let v = out.conservation_violations();
        if !v.is_empty() {
            self.conservation.push(format!("{tag}: {} flows, e.g. {:?}", v.len(), v[0]));
        }
        let switches = out.samples.first().map_or(0, |s| s.free_entries.len());
        if out.samples.iter().any(|s| s.total_flow_entries > (switches * out.capacity) as u64) {
            self.capacity.push(tag);
        }
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn discovery_oracle(r: &mut Report) {
    let start = Instant::now();
    let mut mismatches = 0;
    for seed in 0..100 {
        let net = random_net(seed, 6);
        let flows = enumerate_flows(&net.topology);
        let routes = flow_routes(&net.topology, &flows);
        let (monitored, map) = select_monitored(&flows, &routes, &net.obs);
        let got: Vec<_> = monitored.iter().map(|f| (*f, map[f].clone())).collect();
        if got != monitored_oracle(&net) {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    r.check(
        1,
        "discovery equals brute-force filter",
        mismatches == 0 && t < Duration::from_secs(5),
        format!("100 topologies, {mismatches} mismatches, {:.2?}", t),
    );
}

fn load_arithmetic(r: &mut Report) {
    let f = AggregatedFlow {
        src_subnet: prefix("10.0.0.0/28"),
        dst_subnet: prefix("10.0.1.0/28"),
        src_switch: SwitchId(1),
        dst_switch: SwitchId(2),
    };
    let a = load_of(&f, &LoadModel::new(0.0).unwrap());
    let b = load_of(&f, &LoadModel::new(1.0).unwrap());
    r.check(
        2,
        "load arithmetic",
        (a - 1.0).abs() <= 1e-12 && (b - 257.0).abs() <= 1e-12,
        format!("mu=0 -> {a}, mu=1 /28x/28 -> {b}"),
    );
}

fn greedy_trace(r: &mut Report) {
    let t = Topology::parse("switch 1\nswitch 2\nswitch 3\nlink 1 2\nlink 2 3\n").unwrap();
    let route = t.route(SwitchId(1), SwitchId(3));
    let flows: Vec<_> = (0..4u8)
        .map(|i| AggregatedFlow {
            src_subnet: prefix(&format!("10.0.{i}.0/28")),
            dst_subnet: prefix(&format!("10.1.{i}.0/28")),
            src_switch: SwitchId(1),
            dst_switch: SwitchId(3),
        })
        .collect();
    let routes: RouteMap = flows.iter().map(|f| (*f, route.clone())).collect();
    let free = BTreeMap::from([(SwitchId(1), 6), (SwitchId(2), 6), (SwitchId(3), 8)]);
    let m = LoadModel::new(2.0 / 256.0).unwrap();
    let a = assign_balanced(&flows, &routes, &free, &m);
    let mut per = BTreeMap::new();
    for (_, s) in a.iter() {
        *per.entry(s.0).or_insert(0) += 1;
    }
    let want = BTreeMap::from([(1, 1), (2, 1), (3, 2)]);
    r.check(
        3,
        "greedy trace A=6 B=6 OBS=8",
        per == want && flows.iter().all(|f| load_of(f, &m) == 3.0),
        format!("flows per switch {per:?}, max deficit {}", evaluate(&a, &free, &m).max_deficit),
    );
}

fn paired_runs(audit: &mut RunAudit, r: &mut Report) {
    let start = Instant::now();
    let base = config("tree11.toml");
    let jobs: Vec<_> = (1..=10u64)
        .flat_map(|seed| {
            Strategy::ALL.map(|s| ExperimentConfig {
                seed,
                assignment: s,
                ..base.clone()
            })
        })
        .collect();
    let outs: Vec<RunOutput> = jobs.par_iter().map(|c| run(c).unwrap()).collect();
    let t = start.elapsed();
    for o in &outs {
        audit.add(o);
    }
    let pairs: Vec<_> = outs.chunks(2).map(|p| (&p[0].summary, &p[1].summary)).collect();
    let gini_wins = pairs.iter().filter(|(b, o)| b.gini_free <= o.gini_free).count();
    let detail: Vec<_> = pairs
        .iter()
        .map(|(b, o)| format!("{:.3}/{:.3}", b.gini_free, o.gini_free))
        .collect();
    r.check(
        4,
        "gini balanced <= baseline",
        gini_wins >= 9 && t < Duration::from_secs(120),
        format!("{gini_wins}/10 seeds, {:.1?} for 20 runs [{}]", t, detail.join(" ")),
    );
    let removed_wins = pairs.iter().filter(|(b, o)| b.flow_removed >= o.flow_removed).count();
    let detail: Vec<_> = pairs
        .iter()
        .map(|(b, o)| format!("{}/{}", b.flow_removed, o.flow_removed))
        .collect();
    r.check(
        7,
        "flow_removed balanced >= baseline",
        removed_wins >= 9,
        format!("{removed_wins}/10 seeds [{}]", detail.join(" ")),
    );
}

fn capacity_sweep(audit: &mut RunAudit, r: &mut Report) {
    let start = Instant::now();
    let base = config("capacity_sweep.toml");
    let caps: Vec<usize> = (1..=10).map(|k| k * 300).collect();
    let mut jobs = Vec::new();
    for seed in 1..=5u64 {
        for &cap in &caps {
            for s in Strategy::ALL {
                jobs.push(ExperimentConfig {
                    seed,
                    table_capacity: cap,
                    assignment: s,
                    export: SinkSpec::None,
                    ..base.clone()
                });
            }
        }
    }
    let outs: Vec<RunOutput> = jobs.par_iter().map(|c| run(c).unwrap()).collect();
    let t = start.elapsed();
    for o in &outs {
        audit.add(o);
    }
    // An undefined threshold counts as the next grid point past the sweep.
    let threshold = |seed: u64, s: Strategy| {
        outs.iter()
            .filter(|o| o.config.seed == seed && o.config.assignment == s && o.summary.full_table_errors == 0)
            .map(|o| o.capacity)
            .min()
            .unwrap_or(3300)
    };
    let mut ordered = true;
    let mut ratios = Vec::new();
    let mut detail = Vec::new();
    for seed in 1..=5 {
        let (b, o) = (threshold(seed, Strategy::Balanced), threshold(seed, Strategy::Baseline));
        ordered &= b < o;
        ratios.push(b as f64 / o as f64);
        detail.push(format!("{b}/{o}"));
    }
    let med = median(ratios);
    r.check(
        5,
        "error threshold balanced < baseline",
        ordered && med <= 0.75 && t < Duration::from_secs(600),
        format!("T* per seed [{}], median ratio {med:.3}, {:.1?} for 100 runs", detail.join(" "), t),
    );
    let baseline: Vec<_> = outs.iter().filter(|o| o.config.assignment == Strategy::Baseline).collect();
    let x: Vec<f64> = baseline.iter().map(|o| o.summary.packet_ins as f64).collect();
    let y: Vec<f64> = baseline.iter().map(|o| o.summary.full_table_errors as f64).collect();
    let rho = pearson(&x, &y);
    r.check(
        6,
        "packet-ins correlate with errors",
        rho > 0.5,
        format!("Pearson {rho:.3} over {} baseline runs", x.len()),
    );
}

fn wire_contract(r: &mut Report, audit: &mut RunAudit) {
    let (records, seq, clock, golden_bytes) = golden();
    let bytes = build_datagram(&records, seq, clock).unwrap();
    let golden_ok = bytes.len() == 120 && bytes == golden_bytes && bytes[..2] == [0, 5] && bytes[2..4] == [0, 2];
    let engine_ok = bytes[20] == 4 && bytes[21] == 4;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut round_trips = 0;
    let mut left = 1000;
    while left > 0 {
        let n = rng.gen_range(1..=30).min(left);
        let recs: Vec<_> = (0..n).map(|_| random_v5_record(&mut rng)).collect();
        let clock = HeaderClock {
            sys_uptime_ms: rng.gen(),
            unix_secs: rng.gen(),
            unix_nsecs: rng.gen_range(0..1_000_000_000),
        };
        let enc = build_datagram(&recs, rng.gen(), clock).unwrap();
        let dec = Datagram::decode(&enc).unwrap();
        round_trips += dec.records.iter().zip(&recs).filter(|(a, b)| a == b).count();
        left -= n;
    }

    let out = run(&ExperimentConfig {
        capture_datagrams: true,
        ..config("tree11.toml")
    })
    .unwrap();
    audit.add(&out);
    let mut next: BTreeMap<std::net::Ipv4Addr, u32> = BTreeMap::new();
    let mut gaps = 0;
    let datagrams = out.datagrams.as_deref().unwrap_or_default();
    for d in datagrams {
        let raw = raw_decode(&d.bytes);
        let n = next.entry(d.source).or_insert(0);
        if raw.flow_sequence != *n {
            gaps += 1;
        }
        *n += u32::from(raw.count);
    }
    let total: u32 = next.values().sum();
    r.check(
        8,
        "NetFlow v5 wire contract",
        golden_ok && engine_ok && round_trips == 1000 && gaps == 0 && !datagrams.is_empty() && u64::from(total) == out.export.records_exported,
        format!(
            "golden {golden_ok}, engine 4/4 {engine_ok}, {round_trips}/1000 records round-trip, {} datagrams from {} exporters with {gaps} sequence gaps",
            datagrams.len(),
            next.len()
        ),
    );
}

fn matching(r: &mut Report, audit: &RunAudit) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut disagreements = 0;
    let mut lookups = 0;
    for _ in 0..1000 {
        let (table, _) = random_table(&mut rng, 200);
        for _ in 0..50 {
            let (s, d) = (random_addr(&mut rng), random_addr(&mut rng));
            let got = table.peek(s, d).map(|id| table.entry(id).unwrap().key);
            lookups += 1;
            if got != match_oracle(&table, s, d) {
                disagreements += 1;
            }
        }
    }
    r.check(
        9,
        "matching agrees with exhaustive scan",
        disagreements == 0 && audit.capacity.is_empty(),
        format!(
            "1000 tables, {lookups} lookups, {disagreements} disagreements; capacity exceeded in {} of {} runs",
            audit.capacity.len(),
            audit.runs
        ),
    );
}

fn determinism(r: &mut Report, audit: &mut RunAudit) {
    let dir = tempfile::tempdir().unwrap();
    let once = |name: &str| {
        let path = dir.path().join(name);
        let out = run(&ExperimentConfig {
            export: SinkSpec::File(path.clone()),
            assignment: Strategy::Baseline,
            seed: 4,
            ..config("tree11.toml")
        })
        .unwrap();
        (out, std::fs::read(path).unwrap())
    };
    let (a, fa) = once("a.nf");
    let (b, fb) = once("b.nf");
    audit.add(&a);
    audit.add(&b);
    let frames = read_length_prefixed(&fa).map_or(0, |f| f.len());
    r.check(
        11,
        "repeat runs are byte-identical",
        a.csv() == b.csv() && fa == fb && !fa.is_empty(),
        format!("CSV {} bytes equal {}, export file {} bytes ({frames} datagrams) equal {}", a.csv().len(), a.csv() == b.csv(), fa.len(), fa == fb),
    );
}

fn main() {
    let mut r = Report { failed: 0 };
    let mut audit = RunAudit::default();
    discovery_oracle(&mut r);
    load_arithmetic(&mut r);
    greedy_trace(&mut r);
    paired_runs(&mut audit, &mut r);
    capacity_sweep(&mut audit, &mut r);
    wire_contract(&mut r, &mut audit);
    determinism(&mut r, &mut audit);
    matching(&mut r, &audit);
    r.check(
        10,
        "packet conservation",
        audit.conservation.is_empty(),
        format!("{} runs, violations: {:?}", audit.runs, audit.conservation),
    );
    if r.failed > 0 {
        println!("{} acceptance checks failed", r.failed);
        std::process::exit(1);
    }
}
