use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{Ipv4Addr, SocketAddr, ToSocketAddrs, UdpSocket};
use std::path::PathBuf;
use std::str::FromStr;

use byteorder::{BigEndian, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::netflow::DEFAULT_PORT;

/// Where datagrams go: `none`, `udp:host[:port]` or `file:path`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SinkSpec {
    #[default]
    None,
    Udp { host: String, port: u16 },
    File(PathBuf),
}

#[derive(Debug, thiserror::Error)]
#[error("invalid export sink `{0}`: expected none, udp:host[:port] or file:path")]
pub struct SinkSpecError(String);

impl FromStr for SinkSpec {
    type Err = SinkSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SinkSpecError(s.to_string());
        if s == "none" {
            return Ok(SinkSpec::None);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(SinkSpec::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("udp:") {
            let (host, port) = match rest.rsplit_once(':') {
                Some((h, p)) => (h, p.parse().map_err(|_| bad())?),
                None => (rest, DEFAULT_PORT),
            };
            if host.is_empty() {
                return Err(bad());
            }
            return Ok(SinkSpec::Udp {
                host: host.to_string(),
                port,
            });
        }
        Err(bad())
    }
}

impl TryFrom<String> for SinkSpec {
    type Error = SinkSpecError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SinkSpec> for String {
    fn from(s: SinkSpec) -> String {
        s.to_string()
    }
}

impl fmt::Display for SinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinkSpec::None => write!(f, "none"),
            SinkSpec::Udp { host, port } => write!(f, "udp:{host}:{port}"),
            SinkSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// An opened sink.
#[derive(Debug)]
pub enum Sink {
    None,
    Udp {
        target: SocketAddr,
        /// One socket per exporter address; falls back to an unbound source
        /// when the address is not configured on this host.
        sockets: Vec<(Ipv4Addr, UdpSocket)>,
    },
    File(BufWriter<File>),
}

impl Sink {
    pub fn open(spec: &SinkSpec) -> io::Result<Self> {
        Ok(match spec {
            SinkSpec::None => Sink::None,
            SinkSpec::Udp { host, port } => {
                let target = (host.as_str(), *port)
                    .to_socket_addrs()?
                    .find(SocketAddr::is_ipv4)
                    .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("no IPv4 address for {host}")))?;
                Sink::Udp {
                    target,
                    sockets: Vec::new(),
                }
            }
            SinkSpec::File(path) => Sink::File(BufWriter::new(File::create(path)?)),
        })
    }

    /// Delivers one datagram exported on behalf of `source`.
    pub fn send(&mut self, source: Ipv4Addr, datagram: &[u8]) -> io::Result<()> {
        match self {
            Sink::None => Ok(()),
            Sink::Udp { target, sockets } => {
                let idx = match sockets.iter().position(|(ip, _)| *ip == source) {
                    Some(i) => i,
                    None => {
                        let sock = UdpSocket::bind((source, 0)).or_else(|_| UdpSocket::bind((Ipv4Addr::UNSPECIFIED, 0)))?;
                        sockets.push((source, sock));
                        sockets.len() - 1
                    }
                };
                sockets[idx].1.send_to(datagram, *target).map(|_| ())
            }
            Sink::File(w) => {
                w.write_u16::<BigEndian>(datagram.len() as u16)?;
                w.write_all(datagram)
            }
        }
    }

    pub fn flush(&mut self) -> io::Result<()> {
        match self {
            Sink::File(w) => w.flush(),
            _ => Ok(()),
        }
    }
}

/// Splits a file-sink byte stream back into datagrams.
pub fn read_length_prefixed(bytes: &[u8]) -> io::Result<Vec<&[u8]>> {
    let mut out = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        if rest.len() < 2 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "dangling length prefix"));
        }
        let n = usize::from(u16::from_be_bytes([rest[0], rest[1]]));
        if rest.len() < 2 + n {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated datagram"));
        }
        out.push(&rest[2..2 + n]);
        rest = &rest[2 + n..];
    }
    Ok(out)
}
