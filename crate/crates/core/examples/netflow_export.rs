//! Runs a short experiment, writes its NetFlow v5 export to a file and reads
//! the datagrams back.

use floware::experiment::{run, ExperimentConfig};
use floware::export::{read_length_prefixed, Datagram, SinkSpec};
use floware::topology::TopologySource;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::temp_dir().join("floware-example.nf");
    let cfg = ExperimentConfig {
        topology: TopologySource::File(concat!(env!("CARGO_MANIFEST_DIR"), "/data/as1755.topo").into()),
        hosts_per_switch: 4,
        peers_per_host: 3,
        cycle_s: 10,
        duration_s: 120,
        fixed_timeout_s: 30,
        export: SinkSpec::File(path.clone()),
        ..ExperimentConfig::default()
    };
    let out = run(&cfg)?;
    println!(
        "OBS {:?}: {} records in {} datagrams",
        out.obs, out.export.records_exported, out.export.datagrams
    );

    let bytes = std::fs::read(&path)?;
    for frame in read_length_prefixed(&bytes)?.into_iter().take(3) {
        let d = Datagram::decode(frame)?;
        let h = &d.header;
        println!("datagram: {} bytes, {} records, sequence {}, uptime {} ms", frame.len(), h.count, h.flow_sequence, h.sys_uptime);
        for r in d.records.iter().take(2) {
            println!("  {} -> {}: {} packets, {} bytes, ports {}/{}", r.srcaddr, r.dstaddr, r.d_pkts, r.d_octets, r.input, r.output);
        }
    }
    std::fs::remove_file(path)?;
    Ok(())
}
