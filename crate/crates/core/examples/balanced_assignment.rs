//! Places discovery entries on the switch with the most spare table space
//! and compares the result with a random choice among observation switches.

use std::collections::BTreeMap;

use floware::assignment::evaluate;
use floware::discovery::{enumerate_flows, flow_routes, random_obs, select_monitored};
use floware::{assign_balanced, assign_baseline, LoadModel, SwitchId, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/data/as4755.topo"))?
        .attach_hosts(8, "10.0.0.0".parse()?)?;
    let flows = enumerate_flows(&t);
    let routes = flow_routes(&t, &flows);
    let obs = random_obs(&t, 3, 11);
    let (monitored, flow_to_obs) = select_monitored(&flows, &routes, &obs);
    println!("OBS {obs:?}: {} of {} flows monitored", monitored.len(), flows.len());

    // Some switches are already busy with other entries.
    let free: BTreeMap<SwitchId, i64> = t.switches().map(|s| (s, if s.0 % 3 == 0 { 120 } else { 400 })).collect();
    let m = LoadModel::default();
    let balanced = assign_balanced(&monitored, &routes, &free, &m);
    let baseline = assign_baseline(&monitored, &flow_to_obs, 11)?;

    for (name, a) in [("balanced", &balanced), ("baseline", &baseline)] {
        let score = evaluate(a, &free, &m);
        let used: Vec<_> = a.load_per_switch(&m).into_iter().map(|(s, l)| format!("{s}:{l:.0}")).collect();
        println!("{name:>8}: worst deficit {:.1}, overflow {:.1}", score.max_deficit, score.overflow);
        println!("          load per switch {}", used.join(" "));
    }
    Ok(())
}
