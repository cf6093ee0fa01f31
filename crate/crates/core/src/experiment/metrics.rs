use std::io;

use serde::Serialize;

/// Mean absolute pairwise difference over twice the mean. Zero for empty or
/// all-zero input.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = values.iter().sum();
    if sum == 0.0 {
        return 0.0;
    }
    // Sorted form of the pairwise sum: sum_i (2i - n + 1) x_(i).
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - n as f64 + 1.0) * x)
        .sum();
    let mean = sum / n as f64;
    2.0 * weighted / (2.0 * (n * n) as f64 * mean)
}

/// Network state at one sampling instant. Counters are cumulative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSample {
    pub time_s: u64,
    pub total_flow_entries: u64,
    #[serde(skip)]
    pub free_entries: Vec<u64>,
    pub gini_free: f64,
    pub packet_in_routing: u64,
    pub packet_in_monitoring: u64,
    pub flow_removed: u64,
    pub full_table_errors: u64,
    pub flow_mods: u64,
}

pub const CSV_HEADER: [&str; 8] = [
    "time_s",
    "total_flow_entries",
    "gini_free",
    "packet_in_routing",
    "packet_in_monitoring",
    "flow_removed",
    "full_table_errors",
    "flow_mods",
];

pub fn write_csv<W: io::Write>(samples: &[MetricsSample], w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_HEADER)?;
    for s in samples {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_csv_string(samples: &[MetricsSample]) -> String {
    let mut buf = Vec::new();
    write_csv(samples, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is UTF-8")
}
