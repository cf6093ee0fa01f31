//! Enumerates aggregated flows between subnets and keeps those whose route
//! crosses one of the observation switches.

use std::collections::BTreeSet;

use floware::discovery::{enumerate_flows, flow_routes, select_monitored};
use floware::{SwitchId, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/triangle.topo"))?;
    let flows = enumerate_flows(&t);
    let routes = flow_routes(&t, &flows);
    let obs = BTreeSet::from([SwitchId(1)]);
    let (monitored, flow_to_obs) = select_monitored(&flows, &routes, &obs);

    for f in &flows {
        let tag = if monitored.contains(f) { "monitored" } else { "skipped" };
        println!(
            "{} -> {} via {:?}: {tag} {:?}",
            f.src_subnet,
            f.dst_subnet,
            routes[f].path(),
            flow_to_obs.get(f).map(|s| s.iter().collect::<Vec<_>>())
        );
    }
    println!("{} of {} flows need a discovery entry", monitored.len(), flows.len());
    Ok(())
}
