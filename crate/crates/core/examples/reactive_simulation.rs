//! Drives the discrete-event simulator with reactive shortest-path routing
//! and prints the control events it produces.

use std::sync::Arc;

use floware::sim::*;
use floware::{Topology, WorkloadSpec};

struct Routing(ReactiveRouting);

impl Controller for Routing {
    fn packet_in(&mut self, plane: &mut DataPlane, msg: &PacketIn) -> Resume {
        self.0.on_table_miss(plane, msg).1
    }

    fn flow_removed(&mut self, _: &mut DataPlane, _: &FlowRemoved) {}
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::tree(1, 3)?.attach_hosts(2, "10.0.0.0".parse()?)?;
    let w = WorkloadSpec {
        peers_per_host: 1,
        cycle_s: 5,
        duration_s: 12,
        ..WorkloadSpec::default()
    };
    let schedule = floware::workload::generate(&t, &w)?;
    let plane = DataPlane::new(Arc::new(t), 16).with_event_log(true);
    let mut sim = Simulation::new(plane, Routing(ReactiveRouting::default())).with_arrivals(schedule.packets());
    let log = sim.step(SimTime::from_secs(20));
    for r in log.records().iter().take(12) {
        println!("{:>6} ms  {:<16} switch {}  {}", r.t_ms, r.kind, r.switch, r.key);
    }
    println!("... {} events in total", log.records().len());

    let c = sim.plane().counters();
    println!(
        "packets {} delivered {} packet-ins {} flow-mods {} full-table errors {}",
        c.packets_injected, c.delivered, c.packet_ins(), c.flow_mods, c.full_table_errors
    );
    Ok(())
}
