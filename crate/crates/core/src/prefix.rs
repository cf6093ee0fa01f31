//! IPv4 prefixes, used both for endpoint subnets and for the masked source and
//! destination fields of a flow-table key.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Error raised when a prefix cannot be built or parsed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrefixError {
    #[error("prefix length {0} exceeds 32")]
    Length(u8),
    #[error("{addr}/{len} has host bits set")]
    HostBits { addr: Ipv4Addr, len: u8 },
    #[error("cannot parse prefix `{0}`")]
    Syntax(String),
}

/// An IPv4 address with a mask length. Host bits are always zero.
///
/// Ordering is by address, then mask length, which is what the assignment
/// code relies on for its lexicographic tie-breaking.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ipv4Prefix {
    addr: Ipv4Addr,
    len: u8,
}

/// Endpoint address ranges are plain prefixes.
pub type Subnet = Ipv4Prefix;

impl Ipv4Prefix {
    pub fn new(addr: Ipv4Addr, len: u8) -> Result<Self, PrefixError> {
        if len > 32 {
            return Err(PrefixError::Length(len));
        }
        if u32::from(addr) & !mask_of(len) != 0 {
            return Err(PrefixError::HostBits { addr, len });
        }
        Ok(Self { addr, len })
    }

    /// Builds the prefix of length `len` that contains `addr`, clearing host bits.
    pub fn truncate(addr: Ipv4Addr, len: u8) -> Result<Self, PrefixError> {
        if len > 32 {
            return Err(PrefixError::Length(len));
        }
        Ok(Self {
            addr: Ipv4Addr::from(u32::from(addr) & mask_of(len)),
            len,
        })
    }

    /// A /32 prefix holding exactly one host.
    pub fn host(addr: Ipv4Addr) -> Self {
        Self { addr, len: 32 }
    }

    /// The fully wildcarded prefix 0.0.0.0/0.
    pub fn any() -> Self {
        Self {
            addr: Ipv4Addr::UNSPECIFIED,
            len: 0,
        }
    }

    pub fn addr(&self) -> Ipv4Addr {
        self.addr
    }

    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn mask(&self) -> u32 {
        mask_of(self.len)
    }

    pub fn network(&self) -> u32 {
        u32::from(self.addr)
    }

    /// Number of addresses covered, `2^(32 - len)`.
    pub fn size(&self) -> u64 {
        1u64 << (32 - u32::from(self.len))
    }

    pub fn contains(&self, ip: Ipv4Addr) -> bool {
        u32::from(ip) & self.mask() == self.network()
    }

    pub fn overlaps(&self, other: &Ipv4Prefix) -> bool {
        let shorter = self.len.min(other.len);
        let m = mask_of(shorter);
        self.network() & m == other.network() & m
    }

    /// Address at offset `index` inside the prefix.
    pub fn nth(&self, index: u64) -> Option<Ipv4Addr> {
        if index >= self.size() {
            return None;
        }
        Some(Ipv4Addr::from(self.network() + index as u32))
    }

    /// Usable host addresses (network and broadcast excluded for lengths < 31).
    pub fn usable_hosts(&self) -> u64 {
        match self.len {
            32 => 1,
            31 => 2,
            _ => self.size() - 2,
        }
    }

    /// The `index`-th usable host address, counting from zero.
    pub fn host_at(&self, index: u64) -> Option<Ipv4Addr> {
        if index >= self.usable_hosts() {
            return None;
        }
        let offset = if self.len >= 31 { index } else { index + 1 };
        self.nth(offset)
    }
}

pub(crate) fn mask_of(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - u32::from(len))
    }
}

impl fmt::Display for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl fmt::Debug for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Ipv4Prefix {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = match s.split_once('/') {
            Some((a, l)) => (a, l),
            None => (s, "32"),
        };
        let addr: Ipv4Addr = addr
            .trim()
            .parse()
            .map_err(|_| PrefixError::Syntax(s.to_string()))?;
        let len: u8 = len
            .trim()
            .parse()
            .map_err(|_| PrefixError::Syntax(s.to_string()))?;
        Ipv4Prefix::new(addr, len)
    }
}

impl TryFrom<String> for Ipv4Prefix {
    type Error = PrefixError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Ipv4Prefix> for String {
    fn from(p: Ipv4Prefix) -> Self {
        p.to_string()
    }
}
