//! Loads a topology file, attaches hosts and prints a few shortest routes.

use floware::{SwitchId, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/as1755.topo");
    let t = Topology::from_file(path)?.attach_hosts(4, "10.0.0.0".parse()?)?;
    println!("{} switches, {} links, {} hosts", t.switch_count(), t.links().len(), t.hosts().len());

    for s in t.switches().take(3) {
        println!("switch {s}: subnets {:?}, hosts {:?}", t.subnets_of(s), t.hosts_of(s));
    }
    for (a, b) in [(1, 15), (3, 9), (7, 7)] {
        let r = t.route(SwitchId(a), SwitchId(b));
        println!("route {a} -> {b}: {:?}", r.path());
    }

    let tree = Topology::tree(2, 3)?;
    println!("tree(2,3): {} switches, endpoints {:?}", tree.switch_count(), tree.endpoints());
    Ok(())
}
