//! Installs overlapping entries in one flow table and shows which one a
//! packet hits: highest priority, then the most specific match.

use floware::sim::*;
use floware::SwitchId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut table = FlowTable::new(SwitchId(1), 3);
    let entries = [
        (FlowKey::new("10.0.0.0/24".parse()?, "10.0.1.0/24".parse()?), DISCOVERY_PRIORITY, Action::ToController, Origin::Discovery),
        (FlowKey::exact("10.0.0.1".parse()?, "10.0.1.9".parse()?), ROUTING_PRIORITY, Action::Forward(NextHop::Switch(SwitchId(2))), Origin::Routing),
        (FlowKey::exact("10.0.0.2".parse()?, "10.0.1.9".parse()?), ACTIVE_PRIORITY, Action::Forward(NextHop::Switch(SwitchId(2))), Origin::Active),
    ];
    for (key, prio, action, origin) in entries {
        table.install(FlowEntry::new(key, prio, action, origin), SimTime::ZERO)?;
    }

    for (src, dst) in [("10.0.0.1", "10.0.1.9"), ("10.0.0.2", "10.0.1.9"), ("10.0.0.3", "10.0.1.4"), ("10.0.5.1", "10.0.1.9")] {
        let hit = table.peek(src.parse()?, dst.parse()?).and_then(|id| table.entry(id));
        match hit {
            Some(e) => println!("{src} -> {dst}: {} (priority {}, {:?})", e.key, e.priority, e.action),
            None => println!("{src} -> {dst}: table miss"),
        }
    }

    let extra = FlowEntry::new(FlowKey::exact("10.0.0.7".parse()?, "10.0.1.7".parse()?), ROUTING_PRIORITY, Action::Drop, Origin::Routing);
    match table.install(extra, SimTime::ZERO) {
        Ok(_) => println!("installed a fourth entry"),
        Err(e) => println!("fourth entry rejected: {e}"),
    }
    Ok(())
}
