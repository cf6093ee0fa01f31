//! Generates the seeded ping-cycle workload and summarizes it.

use floware::{Topology, WorkloadSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/tree11.topo"))?
        .attach_hosts(10, "10.0.0.0".parse()?)?;
    for cycle_s in [1, 4, 30] {
        let w = WorkloadSpec {
            cycle_s,
            ..WorkloadSpec::default()
        };
        let s = floware::workload::generate(&t, &w)?;
        println!(
            "cycle {cycle_s:>2} s: {} cycles, {} packets, {} distinct host pairs",
            s.cycles.len(),
            s.packet_count(),
            s.distinct_flows().len()
        );
    }

    let w = WorkloadSpec {
        peers_per_host: 2,
        duration_s: 2,
        ..WorkloadSpec::default()
    };
    let s = floware::workload::generate(&t, &w)?;
    for p in s.packets().take(5) {
        println!("{:>5} ms {} -> {} ({} bytes)", p.at.as_millis(), p.src, p.dst, p.size);
    }
    Ok(())
}
