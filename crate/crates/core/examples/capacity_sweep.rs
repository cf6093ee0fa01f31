//! Sweeps the flow-table size and reports the smallest size at which each
//! strategy sees no full-table errors.

use floware::experiment::{error_threshold, sweep, write_sweep_csv, Dimension, ExperimentConfig, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/capacity_sweep.toml"))?;
    let sizes: Vec<u64> = (1..=10).map(|k| k * 300).collect();
    let rows = sweep(&cfg, Dimension::TableCapacity, &sizes)?;
    for r in &rows {
        println!(
            "{:>5} {:<9} errors {:>6} packet-ins {:>7}",
            r.value,
            r.summary.assignment.to_string(),
            r.summary.full_table_errors,
            r.summary.packet_ins
        );
    }
    for s in Strategy::ALL {
        match error_threshold(&rows, s) {
            Some(t) => println!("{s}: error-free from {t} entries"),
            None => println!("{s}: errors at every size"),
        }
    }
    if let Some(path) = std::env::args().nth(1) {
        write_sweep_csv(&rows, std::fs::File::create(path)?)?;
    }
    Ok(())
}
