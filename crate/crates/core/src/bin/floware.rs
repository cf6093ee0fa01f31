use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use floware::experiment::{self, Dimension, ExperimentConfig, Strategy};
use floware::export::SinkSpec;

#[derive(Parser)]
#[command(name = "floware", version, about = "Simulate balanced flow monitoring and export NetFlow v5")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write the metrics time series as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        assignment: Option<Strategy>,
        #[arg(long)]
        table_size: Option<usize>,
        #[arg(long)]
        cycle: Option<u32>,
        #[arg(long)]
        obs_count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// none, udp:host[:port] or file:path
        #[arg(long)]
        export: Option<SinkSpec>,
        /// Metrics CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every control event as JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run one experiment per value and strategy and write one CSV row each.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dimension: Dimension,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<(), Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Run {
            config,
            assignment,
            table_size,
            cycle,
            obs_count,
            seed,
            export,
            out,
            events,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(a) = assignment {
                cfg.assignment = a;
            }
            if let Some(n) = table_size {
                cfg.table_capacity = n;
            }
            if let Some(c) = cycle {
                cfg.cycle_s = c;
            }
            if let Some(k) = obs_count {
                cfg.obs = None;
                cfg.obs_count = k;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = export {
                cfg.export = e;
            }
            cfg.event_log |= events.is_some();
            let run = experiment::run(&cfg)?;
            experiment::write_csv(&run.samples, output(out.as_ref())?)?;
            if let Some(p) = events {
                run.event_log.write_json_lines(BufWriter::new(File::create(p)?))?;
            }
            let s = &run.summary;
            eprintln!(
                "{} obs={:?} entries={} gini={:.4} packet_in={} (routing {}, monitoring {}) flow_removed={} errors={} datagrams={}",
                s.assignment,
                run.obs.iter().map(|o| o.0).collect::<Vec<_>>(),
                s.total_flow_entries,
                s.gini_free,
                s.packet_ins,
                s.packet_in_routing,
                s.packet_in_monitoring,
                s.flow_removed,
                s.full_table_errors,
                s.datagrams,
            );
            if let Some(e) = &run.export_error {
                eprintln!("export: {} I/O errors, last: {e}", run.export.io_errors);
            }
        }
        Command::Sweep {
            config,
            dimension,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = experiment::sweep(&cfg, dimension, &values)?;
            experiment::write_sweep_csv(&rows, output(out.as_ref())?)?;
            if dimension == Dimension::TableCapacity {
                for s in Strategy::ALL {
                    match experiment::error_threshold(&rows, s) {
                        Some(t) => eprintln!("{s}: no full-table errors from {t} entries"),
                        None => eprintln!("{s}: errors at every swept size"),
                    }
                }
            }
        }
    }
    Ok(())
}
