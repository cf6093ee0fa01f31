use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::Ipv4Addr;
use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, Strategy};
use super::metrics::{gini, MetricsSample};
use super::ExperimentError;
use crate::assignment::{assign_balanced, assign_baseline, LoadModel};
use crate::discovery::{
    enumerate_flows, flow_routes, random_obs, select_monitored, AggregatedFlow, DiscoveryPlan, FlowToObs, InstallReport,
    RouteMap,
};
use crate::export::{ExportStats, ExportedDatagram, Exporter, Sink};
use crate::scheduler::{Scheduler, SchedulerStats};
use crate::sim::{
    Controller, DataPlane, EventLog, FlowKey, FlowRemoved, Origin, PacketIn, PacketInReason, PlaneCounters,
    ReactiveRouting, Resume, SimTime, Simulation, ACTIVE_PRIORITY,
};
use crate::topology::{load_topology, SwitchId, Topology};
use crate::workload;

pub const TIMER_DISCOVERY: u64 = 0;
pub const TIMER_SAMPLE: u64 = 1;

/// Inputs of discovery that do not depend on table state.
#[derive(Debug, Clone)]
pub struct DiscoverySetup {
    pub obs: BTreeSet<SwitchId>,
    pub flows: Vec<AggregatedFlow>,
    pub routes: RouteMap,
    pub monitored: BTreeSet<AggregatedFlow>,
    pub flow_to_obs: FlowToObs,
}

impl DiscoverySetup {
    pub fn new(t: &Topology, obs: BTreeSet<SwitchId>) -> Self {
        let flows = enumerate_flows(t);
        let routes = flow_routes(t, &flows);
        let (monitored, flow_to_obs) = select_monitored(&flows, &routes, &obs);
        Self {
            obs,
            flows,
            routes,
            monitored,
            flow_to_obs,
        }
    }
}

/// Reactive routing plus discovery, scheduling and export.
#[derive(Debug)]
pub struct FlowareController {
    routing: ReactiveRouting,
    scheduler: Scheduler,
    exporter: Exporter,
    setup: DiscoverySetup,
    strategy: Strategy,
    model: LoadModel,
    seed: u64,
    plan: Option<DiscoveryPlan>,
    install_report: InstallReport,
    samples: Vec<MetricsSample>,
    removed_packets: HashMap<(Ipv4Addr, Ipv4Addr), u64>,
    stats_records: u64,
}

impl FlowareController {
    pub fn new(
        routing: ReactiveRouting,
        scheduler: Scheduler,
        exporter: Exporter,
        setup: DiscoverySetup,
        strategy: Strategy,
        model: LoadModel,
        seed: u64,
    ) -> Self {
        Self {
            routing,
            scheduler,
            exporter,
            setup,
            strategy,
            model,
            seed,
            plan: None,
            install_report: InstallReport::default(),
            samples: Vec::new(),
            removed_packets: HashMap::new(),
            stats_records: 0,
        }
    }

    pub fn plan(&self) -> Option<&DiscoveryPlan> {
        self.plan.as_ref()
    }

    pub fn samples(&self) -> &[MetricsSample] {
        &self.samples
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    pub fn exporter(&self) -> &Exporter {
        &self.exporter
    }

    /// Assigns and installs discovery entries using current free capacity.
    pub fn install_discovery(&mut self, plane: &mut DataPlane) {
        let free: BTreeMap<SwitchId, i64> = plane.free_entries().into_iter().map(|(s, f)| (s, f as i64)).collect();
        let s = &self.setup;
        let assignment = match self.strategy {
            Strategy::Balanced => assign_balanced(&s.monitored, &s.routes, &free, &self.model),
            Strategy::Baseline => {
                assign_baseline(&s.monitored, &s.flow_to_obs, self.seed).expect("monitored flows cross an OBS")
            }
        };
        let plan = DiscoveryPlan::new(s.monitored.clone(), s.flow_to_obs.clone(), assignment);
        self.install_report = plan.install(plane);
        self.plan = Some(plan);
    }

    fn sample(&mut self, plane: &DataPlane) {
        for t in plane.tables() {
            assert!(t.len() <= t.capacity(), "table of {} over capacity", t.switch());
        }
        let free: Vec<u64> = plane.tables().map(|t| t.free() as u64).collect();
        let values: Vec<f64> = free.iter().map(|f| *f as f64).collect();
        let c = plane.counters();
        self.samples.push(MetricsSample {
            time_s: plane.now().as_millis() / 1000,
            total_flow_entries: plane.total_entries() as u64,
            free_entries: free,
            gini_free: gini(&values),
            packet_in_routing: c.packet_in_routing,
            packet_in_monitoring: c.packet_in_monitoring,
            flow_removed: c.flow_removed,
            full_table_errors: c.full_table_errors,
            flow_mods: c.flow_mods,
        });
    }
}

impl Controller for FlowareController {
    fn packet_in(&mut self, plane: &mut DataPlane, msg: &PacketIn) -> Resume {
        match msg.reason {
            PacketInReason::TableMiss => self.routing.on_table_miss(plane, msg).1,
            PacketInReason::Action {
                origin: Origin::Discovery,
                key,
            } => {
                let Some(obs) = self
                    .plan
                    .as_ref()
                    .and_then(|p| p.flow_for_key(&key))
                    .and_then(|f| self.setup.flow_to_obs.get(f))
                else {
                    return Resume::PacketOut;
                };
                self.scheduler.on_packet_in(plane, msg, obs);
                let exact = FlowKey::exact(msg.packet.src, msg.packet.dst);
                if plane.table(msg.switch).get(&exact, ACTIVE_PRIORITY).is_some() {
                    Resume::Rematch
                } else {
                    Resume::PacketOut
                }
            }
            PacketInReason::Action { .. } => Resume::PacketOut,
        }
    }

    fn flow_removed(&mut self, plane: &mut DataPlane, msg: &FlowRemoved) {
        if msg.entry.origin != Origin::Active {
            return;
        }
        if let Some(record) = self.scheduler.on_flow_removed(plane, msg) {
            *self.removed_packets.entry((record.src_ip, record.dst_ip)).or_insert(0) += msg.entry.packets;
            self.stats_records += 1;
            self.exporter.submit(&record, plane.now());
        }
    }

    fn timer(&mut self, plane: &mut DataPlane, token: u64) {
        match token {
            TIMER_DISCOVERY => self.install_discovery(plane),
            TIMER_SAMPLE => {
                self.exporter.flush(plane.now());
                self.sample(plane);
            }
            _ => {}
        }
    }
}

/// Per host-pair packet accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlowAccount {
    pub generated: u64,
    pub packet_ins: u64,
    pub removed_packets: u64,
    pub exported_packets: u64,
}

/// Final values of a run, one CSV row in sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub assignment: Strategy,
    pub seed: u64,
    pub table_capacity: usize,
    pub cycle_s: u32,
    pub obs_count: usize,
    pub total_flow_entries: u64,
    pub gini_free: f64,
    pub packet_in_routing: u64,
    pub packet_in_monitoring: u64,
    pub packet_ins: u64,
    pub flow_removed: u64,
    pub full_table_errors: u64,
    pub flow_mods: u64,
    pub monitored_flows: usize,
    pub discovery_failures: usize,
    pub records_exported: u64,
    pub datagrams: u64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub obs: BTreeSet<SwitchId>,
    pub samples: Vec<MetricsSample>,
    pub summary: RunSummary,
    pub plan: Option<DiscoveryPlan>,
    pub install_report: InstallReport,
    pub counters: PlaneCounters,
    pub scheduler: SchedulerStats,
    pub export: ExportStats,
    pub export_error: Option<String>,
    /// Every datagram, when `capture_datagrams` is set.
    pub datagrams: Option<Vec<ExportedDatagram>>,
    pub event_log: EventLog,
    /// FlowRemoved messages handed to the export stage.
    pub stats_records: u64,
    pub accounts: BTreeMap<(Ipv4Addr, Ipv4Addr), FlowAccount>,
    /// Table capacity of every switch.
    pub capacity: usize,
}

impl RunOutput {
    pub fn csv(&self) -> String {
        super::metrics::to_csv_string(&self.samples)
    }

    /// Host pairs whose exported packets differ from their removed packets or
    /// exceed what was generated.
    pub fn conservation_violations(&self) -> Vec<((Ipv4Addr, Ipv4Addr), FlowAccount)> {
        self.accounts
            .iter()
            .filter(|(_, a)| a.exported_packets != a.removed_packets || a.exported_packets > a.generated)
            .map(|(k, a)| (*k, *a))
            .collect()
    }
}

/// Topology of a config with hosts attached.
pub fn build_topology(cfg: &ExperimentConfig) -> Result<Topology, ExperimentError> {
    Ok(load_topology(&cfg.topology)?.attach_hosts(cfg.hosts_per_switch, cfg.subnet_base)?)
}

pub fn select_obs(cfg: &ExperimentConfig, t: &Topology) -> Result<BTreeSet<SwitchId>, ExperimentError> {
    match &cfg.obs {
        Some(ids) => {
            let obs: BTreeSet<SwitchId> = ids.iter().map(|i| SwitchId(*i)).collect();
            if let Some(s) = obs.iter().find(|s| !t.contains(**s)) {
                return Err(ExperimentError::Config(super::ConfigError::Invalid(format!(
                    "OBS {s} is not in the topology"
                ))));
            }
            Ok(obs)
        }
        None => Ok(random_obs(t, cfg.obs_count, cfg.seed)),
    }
}

/// Runs one experiment end to end.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let topo = build_topology(cfg)?;
    let obs = select_obs(cfg, &topo)?;
    let schedule = workload::generate(&topo, &cfg.workload())?;
    let setup = DiscoverySetup::new(&topo, obs.clone());
    let sink = Sink::open(&cfg.export).map_err(ExperimentError::Sink)?;
    let mut exporter = Exporter::new(cfg.source_mode, sink, cfg.epoch_unix_s);
    if cfg.capture_datagrams {
        exporter = exporter.with_capture();
    }
    let controller = FlowareController::new(
        ReactiveRouting::new(cfg.routing_idle_s),
        Scheduler::new(cfg.policy()),
        exporter,
        setup,
        cfg.assignment,
        LoadModel::new(cfg.mu)?,
        cfg.seed,
    );
    let plane = DataPlane::new(Arc::new(topo), cfg.table_capacity).with_event_log(cfg.event_log);

    let end = SimTime::from_secs(u64::from(cfg.duration_s));
    let mut sim = Simulation::new(plane, controller)
        .with_arrivals(schedule.packets())
        .with_control_latency_ms(cfg.control_latency_ms);
    sim.schedule_timer(SimTime::from_secs(u64::from(cfg.learn_time_s())), TIMER_DISCOVERY);
    let step = u64::from(cfg.sample_interval_s);
    for k in 1..=u64::from(cfg.duration_s) / step {
        sim.schedule_timer(SimTime::from_secs(k * step), TIMER_SAMPLE);
    }
    sim.step(end);
    let (plane, mut ctl) = sim.into_parts();
    ctl.exporter.finish(plane.now());

    let mut accounts: BTreeMap<(Ipv4Addr, Ipv4Addr), FlowAccount> = BTreeMap::new();
    for (k, t) in plane.tallies() {
        let a = accounts.entry(*k).or_default();
        a.generated = t.generated;
        a.packet_ins = t.packet_ins;
    }
    for (k, p) in &ctl.removed_packets {
        accounts.entry(*k).or_default().removed_packets = *p;
    }
    for (k, p) in ctl.exporter.exported_packets() {
        accounts.entry(*k).or_default().exported_packets = *p;
    }

    let counters = plane.counters().clone();
    let last = ctl.samples.last();
    let export = ctl.exporter.stats().clone();
    let summary = RunSummary {
        assignment: cfg.assignment,
        seed: cfg.seed,
        table_capacity: cfg.table_capacity,
        cycle_s: cfg.cycle_s,
        obs_count: obs.len(),
        total_flow_entries: plane.total_entries() as u64,
        gini_free: last.map_or(0.0, |s| s.gini_free),
        packet_in_routing: counters.packet_in_routing,
        packet_in_monitoring: counters.packet_in_monitoring,
        packet_ins: counters.packet_ins(),
        flow_removed: counters.flow_removed,
        full_table_errors: counters.full_table_errors,
        flow_mods: counters.flow_mods,
        monitored_flows: ctl.setup.monitored.len(),
        discovery_failures: ctl.install_report.failed.len(),
        records_exported: export.records_exported,
        datagrams: export.datagrams,
    };
    Ok(RunOutput {
        config: cfg.clone(),
        obs,
        samples: std::mem::take(&mut ctl.samples),
        summary,
        plan: ctl.plan.take(),
        install_report: std::mem::take(&mut ctl.install_report),
        counters,
        scheduler: ctl.scheduler.stats().clone(),
        export,
        export_error: ctl.exporter.last_error().map(str::to_string),
        datagrams: ctl.exporter.captured().map(<[_]>::to_vec),
        event_log: plane.log().clone(),
        stats_records: ctl.stats_records,
        accounts,
        capacity: cfg.table_capacity,
    })
}
