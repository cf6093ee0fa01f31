//! Conversion of collected statistics into NetFlow v5 datagrams and their
//! delivery to a collector.

pub mod netflow;
mod sink;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;
use crate::topology::SwitchId;
pub use netflow::{build_datagram, Datagram, HeaderClock, NetflowError, V5Header, V5Record};
pub use sink::{read_length_prefixed, Sink, SinkSpec, SinkSpecError};

/// Final counters of one active-flow entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StatsRecord {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub packets: u64,
    pub bytes: u64,
    pub first: SimTime,
    pub last: SimTime,
    pub home_switch: SwitchId,
    pub eligible_obs: BTreeSet<SwitchId>,
    /// Interface indices of the home switch.
    pub input_port: u16,
    pub output_port: u16,
}

/// Which switch a datagram claims to come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    /// The OBS the collector expects the flow to be seen at.
    #[default]
    Transparent,
    /// The switch that actually collected the counters.
    Actual,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown source mode `{0}`: expected transparent or actual")]
pub struct SourceModeError(String);

impl FromStr for SourceMode {
    type Err = SourceModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transparent" => Ok(SourceMode::Transparent),
            "actual" => Ok(SourceMode::Actual),
            _ => Err(SourceModeError(s.to_string())),
        }
    }
}

impl fmt::Display for SourceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceMode::Transparent => "transparent",
            SourceMode::Actual => "actual",
        })
    }
}

/// Exporter address for a record. Transparent mode uses the smallest eligible OBS.
pub fn attribute_source(s: &StatsRecord, mode: SourceMode) -> Ipv4Addr {
    match mode {
        SourceMode::Transparent => s
            .eligible_obs
            .first()
            .expect("monitored flows cross at least one OBS")
            .management_ip(),
        SourceMode::Actual => s.home_switch.management_ip(),
    }
}

fn ms_since(t: SimTime, boot: SimTime) -> u32 {
    u32::try_from(t.as_millis().saturating_sub(boot.as_millis())).unwrap_or(u32::MAX)
}

/// Maps a stats record onto the v5 record layout.
pub fn to_record(s: &StatsRecord, boot: SimTime) -> V5Record {
    V5Record {
        srcaddr: s.src_ip,
        dstaddr: s.dst_ip,
        input: s.input_port,
        output: s.output_port,
        d_pkts: u32::try_from(s.packets).unwrap_or(u32::MAX),
        d_octets: u32::try_from(s.bytes).unwrap_or(u32::MAX),
        first: ms_since(s.first, boot),
        last: ms_since(s.last, boot),
        ..V5Record::default()
    }
}

/// A datagram as handed to the sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportedDatagram {
    pub source: Ipv4Addr,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExportStats {
    /// Every record handed to the exporter.
    pub records_received: u64,
    /// Records without packets, which are not exported.
    pub records_empty: u64,
    pub records_exported: u64,
    pub datagrams: u64,
    pub io_errors: u64,
}

/// Batches records per exporter address and emits datagrams of at most 30.
///
/// Uptime is measured from simulation start; the wall clock in the header is
/// `epoch_unix_s` plus simulated time.
#[derive(Debug)]
pub struct Exporter {
    mode: SourceMode,
    sink: Sink,
    epoch_unix_s: u64,
    pending: BTreeMap<Ipv4Addr, Vec<V5Record>>,
    sequence: BTreeMap<Ipv4Addr, u32>,
    stats: ExportStats,
    exported_packets: HashMap<(Ipv4Addr, Ipv4Addr), u64>,
    captured: Option<Vec<ExportedDatagram>>,
    last_error: Option<String>,
}

impl Exporter {
    pub fn new(mode: SourceMode, sink: Sink, epoch_unix_s: u64) -> Self {
        Self {
            mode,
            sink,
            epoch_unix_s,
            pending: BTreeMap::new(),
            sequence: BTreeMap::new(),
            stats: ExportStats::default(),
            exported_packets: HashMap::new(),
            captured: None,
            last_error: None,
        }
    }

    /// Also keeps a copy of every datagram in memory.
    pub fn with_capture(mut self) -> Self {
        self.captured = Some(Vec::new());
        self
    }

    pub fn mode(&self) -> SourceMode {
        self.mode
    }

    pub fn submit(&mut self, s: &StatsRecord, now: SimTime) {
        self.stats.records_received += 1;
        if s.packets == 0 {
            self.stats.records_empty += 1;
            return;
        }
        let source = attribute_source(s, self.mode);
        *self.exported_packets.entry((s.src_ip, s.dst_ip)).or_insert(0) += s.packets;
        let queue = self.pending.entry(source).or_default();
        queue.push(to_record(s, SimTime::ZERO));
        if queue.len() == netflow::MAX_RECORDS {
            let batch = std::mem::take(queue);
            self.emit(source, batch, now);
        }
    }

    /// Sends every pending record.
    pub fn flush(&mut self, now: SimTime) {
        let pending = std::mem::take(&mut self.pending);
        for (source, records) in pending {
            for chunk in records.chunks(netflow::MAX_RECORDS) {
                self.emit(source, chunk.to_vec(), now);
            }
        }
    }

    /// Flushes records and the sink.
    pub fn finish(&mut self, now: SimTime) {
        self.flush(now);
        if let Err(e) = self.sink.flush() {
            self.record_error(e);
        }
    }

    fn clock(&self, now: SimTime) -> HeaderClock {
        let ms = now.as_millis();
        HeaderClock {
            sys_uptime_ms: u32::try_from(ms).unwrap_or(u32::MAX),
            unix_secs: u32::try_from(self.epoch_unix_s + ms / 1000).unwrap_or(u32::MAX),
            unix_nsecs: ((ms % 1000) * 1_000_000) as u32,
        }
    }

    fn emit(&mut self, source: Ipv4Addr, records: Vec<V5Record>, now: SimTime) {
        if records.is_empty() {
            return;
        }
        let clock = self.clock(now);
        let seq = self.sequence.entry(source).or_insert(0);
        let n = records.len() as u32;
        let datagram = Datagram::new(records, *seq, clock).expect("batches hold 1 to 30 records");
        *seq = seq.wrapping_add(n);
        self.stats.records_exported += u64::from(n);
        self.stats.datagrams += 1;
        let bytes = datagram.encode();
        if let Err(e) = self.sink.send(source, &bytes) {
            self.record_error(e);
        }
        if let Some(c) = &mut self.captured {
            c.push(ExportedDatagram { source, bytes });
        }
    }

    fn record_error(&mut self, e: std::io::Error) {
        self.stats.io_errors += 1;
        self.last_error = Some(e.to_string());
    }

    pub fn stats(&self) -> &ExportStats {
        &self.stats
    }

    pub fn last_error(&self) -> Option<&str> {
        self.last_error.as_deref()
    }

    /// Packets exported so far per (src, dst) host pair.
    pub fn exported_packets(&self) -> &HashMap<(Ipv4Addr, Ipv4Addr), u64> {
        &self.exported_packets
    }

    pub fn captured(&self) -> Option<&[ExportedDatagram]> {
        self.captured.as_deref()
    }

    /// Next sequence number per exporter address.
    pub fn sequences(&self) -> &BTreeMap<Ipv4Addr, u32> {
        &self.sequence
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(packets: u64, obs: &[u32], home: u32) -> StatsRecord {
        StatsRecord {
            src_ip: Ipv4Addr::new(10, 0, 0, 1),
            dst_ip: Ipv4Addr::new(10, 0, 0, 4),
            packets,
            bytes: packets * 98,
            first: SimTime::from_secs(2),
            last: SimTime::from_secs(9),
            home_switch: SwitchId(home),
            eligible_obs: obs.iter().map(|s| SwitchId(*s)).collect(),
            input_port: 1,
            output_port: 2,
        }
    }

    #[test]
    fn attribution() {
        assert_eq!(
            attribute_source(&record(1, &[7], 3), SourceMode::Transparent),
            Ipv4Addr::new(192, 168, 100, 7)
        );
        assert_eq!(
            attribute_source(&record(1, &[2, 7], 3), SourceMode::Transparent),
            Ipv4Addr::new(192, 168, 100, 2)
        );
        assert_eq!(
            attribute_source(&record(1, &[7], 3), SourceMode::Actual),
            Ipv4Addr::new(192, 168, 100, 3)
        );
    }

    #[test]
    fn record_mapping() {
        let r = to_record(&record(25, &[1], 1), SimTime::ZERO);
        assert_eq!((r.d_pkts, r.d_octets), (25, 2450));
        assert_eq!((r.first, r.last), (2000, 9000));
        assert_eq!(r.nexthop, Ipv4Addr::UNSPECIFIED);
        assert_eq!((r.input, r.output, r.prot, r.src_mask, r.dst_mask), (1, 2, 1, 32, 32));
        assert_eq!(to_record(&record(1, &[1], 1), SimTime::from_secs(2)).first, 0);
    }

    #[test]
    fn batching_and_sequences() {
        let mut e = Exporter::new(SourceMode::Actual, Sink::None, 0).with_capture();
        for _ in 0..31 {
            e.submit(&record(1, &[1], 1), SimTime::from_secs(1));
        }
        e.submit(&record(0, &[1], 1), SimTime::from_secs(1));
        e.submit(&record(2, &[1], 2), SimTime::from_secs(1));
        e.finish(SimTime::from_secs(2));
        let dgs = e.captured().unwrap();
        let decoded: Vec<_> = dgs.iter().map(|d| Datagram::decode(&d.bytes).unwrap()).collect();
        assert_eq!(decoded.iter().map(|d| d.header.count).collect::<Vec<_>>(), vec![30, 1, 1]);
        assert_eq!(decoded[1].header.flow_sequence, 30);
        assert_eq!(decoded[2].header.flow_sequence, 0);
        assert_eq!(e.stats().records_received, 33);
        assert_eq!(e.stats().records_empty, 1);
        assert_eq!(e.stats().records_exported, 32);
    }
}
