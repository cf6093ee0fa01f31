//! NetFlow v5 wire format.
//!
//! A datagram is a 24-byte header followed by 1 to 30 records of 48 bytes.
//! Every multibyte field is big-endian.

use std::io::{Cursor, Read};
use std::net::Ipv4Addr;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

pub const VERSION: u16 = 5;
pub const HEADER_LEN: usize = 24;
pub const RECORD_LEN: usize = 48;
pub const MAX_RECORDS: usize = 30;
pub const DEFAULT_PORT: u16 = 9996;
pub const ENGINE_TYPE: u8 = 4;
pub const ENGINE_ID: u8 = 4;
/// IANA protocol number of ICMP.
pub const PROTO_ICMP: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum NetflowError {
    #[error("a datagram carries 1 to {MAX_RECORDS} records, got {0}")]
    RecordCount(usize),
    #[error("unsupported version {0}")]
    Version(u16),
    #[error("datagram length {actual} does not match {expected} for the declared count")]
    Length { expected: usize, actual: usize },
    #[error("truncated datagram")]
    Truncated(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct V5Header {
    pub version: u16,
    pub count: u16,
    pub sys_uptime: u32,
    pub unix_secs: u32,
    pub unix_nsecs: u32,
    pub flow_sequence: u32,
    pub engine_type: u8,
    pub engine_id: u8,
    pub sampling_interval: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct V5Record {
    pub srcaddr: Ipv4Addr,
    pub dstaddr: Ipv4Addr,
    pub nexthop: Ipv4Addr,
    pub input: u16,
    pub output: u16,
    pub d_pkts: u32,
    pub d_octets: u32,
    pub first: u32,
    pub last: u32,
    pub srcport: u16,
    pub dstport: u16,
    pub tcp_flags: u8,
    pub prot: u8,
    pub tos: u8,
    pub src_as: u16,
    pub dst_as: u16,
    pub src_mask: u8,
    pub dst_mask: u8,
}

impl Default for V5Record {
    fn default() -> Self {
        Self {
            srcaddr: Ipv4Addr::UNSPECIFIED,
            dstaddr: Ipv4Addr::UNSPECIFIED,
            nexthop: Ipv4Addr::UNSPECIFIED,
            input: 0,
            output: 0,
            d_pkts: 0,
            d_octets: 0,
            first: 0,
            last: 0,
            srcport: 0,
            dstport: 0,
            tcp_flags: 0,
            prot: PROTO_ICMP,
            tos: 0,
            src_as: 0,
            dst_as: 0,
            src_mask: 32,
            dst_mask: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Datagram {
    pub header: V5Header,
    pub records: Vec<V5Record>,
}

/// Header fields that come from the exporter rather than the records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeaderClock {
    pub sys_uptime_ms: u32,
    pub unix_secs: u32,
    pub unix_nsecs: u32,
}

impl Datagram {
    pub fn new(records: Vec<V5Record>, flow_sequence: u32, clock: HeaderClock) -> Result<Self, NetflowError> {
        if records.is_empty() || records.len() > MAX_RECORDS {
            return Err(NetflowError::RecordCount(records.len()));
        }
        Ok(Self {
            header: V5Header {
                version: VERSION,
                count: records.len() as u16,
                sys_uptime: clock.sys_uptime_ms,
                unix_secs: clock.unix_secs,
                unix_nsecs: clock.unix_nsecs,
                flow_sequence,
                engine_type: ENGINE_TYPE,
                engine_id: ENGINE_ID,
                sampling_interval: 0,
            },
            records,
        })
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + RECORD_LEN * self.records.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.encoded_len());
        let h = &self.header;
        // Writes into a Vec cannot fail.
        buf.write_u16::<BigEndian>(h.version).unwrap();
        buf.write_u16::<BigEndian>(h.count).unwrap();
        buf.write_u32::<BigEndian>(h.sys_uptime).unwrap();
        buf.write_u32::<BigEndian>(h.unix_secs).unwrap();
        buf.write_u32::<BigEndian>(h.unix_nsecs).unwrap();
        buf.write_u32::<BigEndian>(h.flow_sequence).unwrap();
        buf.push(h.engine_type);
        buf.push(h.engine_id);
        buf.write_u16::<BigEndian>(h.sampling_interval).unwrap();
        for r in &self.records {
            buf.extend_from_slice(&r.srcaddr.octets());
            buf.extend_from_slice(&r.dstaddr.octets());
            buf.extend_from_slice(&r.nexthop.octets());
            buf.write_u16::<BigEndian>(r.input).unwrap();
            buf.write_u16::<BigEndian>(r.output).unwrap();
            buf.write_u32::<BigEndian>(r.d_pkts).unwrap();
            buf.write_u32::<BigEndian>(r.d_octets).unwrap();
            buf.write_u32::<BigEndian>(r.first).unwrap();
            buf.write_u32::<BigEndian>(r.last).unwrap();
            buf.write_u16::<BigEndian>(r.srcport).unwrap();
            buf.write_u16::<BigEndian>(r.dstport).unwrap();
            buf.push(0);
            buf.push(r.tcp_flags);
            buf.push(r.prot);
            buf.push(r.tos);
            buf.write_u16::<BigEndian>(r.src_as).unwrap();
            buf.write_u16::<BigEndian>(r.dst_as).unwrap();
            buf.push(r.src_mask);
            buf.push(r.dst_mask);
            buf.write_u16::<BigEndian>(0).unwrap();
        }
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, NetflowError> {
        let mut c = Cursor::new(bytes);
        let header = V5Header {
            version: c.read_u16::<BigEndian>()?,
            count: c.read_u16::<BigEndian>()?,
            sys_uptime: c.read_u32::<BigEndian>()?,
            unix_secs: c.read_u32::<BigEndian>()?,
            unix_nsecs: c.read_u32::<BigEndian>()?,
            flow_sequence: c.read_u32::<BigEndian>()?,
            engine_type: c.read_u8()?,
            engine_id: c.read_u8()?,
            sampling_interval: c.read_u16::<BigEndian>()?,
        };
        if header.version != VERSION {
            return Err(NetflowError::Version(header.version));
        }
        let count = usize::from(header.count);
        if count == 0 || count > MAX_RECORDS {
            return Err(NetflowError::RecordCount(count));
        }
        let expected = HEADER_LEN + RECORD_LEN * count;
        if bytes.len() != expected {
            return Err(NetflowError::Length {
                expected,
                actual: bytes.len(),
            });
        }
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let srcaddr = read_addr(&mut c)?;
            let dstaddr = read_addr(&mut c)?;
            let nexthop = read_addr(&mut c)?;
            let input = c.read_u16::<BigEndian>()?;
            let output = c.read_u16::<BigEndian>()?;
            let d_pkts = c.read_u32::<BigEndian>()?;
            let d_octets = c.read_u32::<BigEndian>()?;
            let first = c.read_u32::<BigEndian>()?;
            let last = c.read_u32::<BigEndian>()?;
            let srcport = c.read_u16::<BigEndian>()?;
            let dstport = c.read_u16::<BigEndian>()?;
            let _pad1 = c.read_u8()?;
            let tcp_flags = c.read_u8()?;
            let prot = c.read_u8()?;
            let tos = c.read_u8()?;
            let src_as = c.read_u16::<BigEndian>()?;
            let dst_as = c.read_u16::<BigEndian>()?;
            let src_mask = c.read_u8()?;
            let dst_mask = c.read_u8()?;
            let _pad2 = c.read_u16::<BigEndian>()?;
            records.push(V5Record {
                srcaddr,
                dstaddr,
                nexthop,
                input,
                output,
                d_pkts,
                d_octets,
                first,
                last,
                srcport,
                dstport,
                tcp_flags,
                prot,
                tos,
                src_as,
                dst_as,
                src_mask,
                dst_mask,
            });
        }
        Ok(Self { header, records })
    }
}

fn read_addr(c: &mut Cursor<&[u8]>) -> std::io::Result<Ipv4Addr> {
    let mut o = [0u8; 4];
    c.read_exact(&mut o)?;
    Ok(Ipv4Addr::from(o))
}

/// Encodes records into one datagram.
pub fn build_datagram(records: &[V5Record], flow_sequence: u32, clock: HeaderClock) -> Result<Vec<u8>, NetflowError> {
    Ok(Datagram::new(records.to_vec(), flow_sequence, clock)?.encode())
}
