//! Runs the 11-switch tree under both placement strategies and compares
//! table usage and collected statistics. Pass a seed as the first argument.

use floware::experiment::{run, ExperimentConfig, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let base = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/tree11.toml"))?;
    println!("{:<9} {:>6} {:>10} {:>10} {:>12} {:>8}", "strategy", "gini", "packet-in", "removed", "table-full", "entries");
    for assignment in Strategy::ALL {
        let out = run(&ExperimentConfig {
            seed,
            assignment,
            ..base.clone()
        })?;
        let s = &out.summary;
        println!(
            "{:<9} {:>6.3} {:>10} {:>10} {:>12} {:>8}",
            assignment.to_string(),
            s.gini_free,
            s.packet_ins,
            s.flow_removed,
            s.full_table_errors,
            s.total_flow_entries
        );
    }
    Ok(())
}
