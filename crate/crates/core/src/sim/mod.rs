//! Deterministic discrete-event model of OpenFlow-style switches and the
//! controller's data-plane interface.
//!
//! Switch state lives in [`FlowTable`]s owned by a [`DataPlane`]. A
//! [`Simulation`] drives packet arrivals, entry expirations and control
//! messages in timestamp order and hands packet-in / flow-removed messages to a
//! [`Controller`] implementation.

mod engine;
mod log;
mod message;
mod routing;
mod table;

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

pub use engine::{Controller, DataPlane, PlaneCounters, Resume, Simulation};
pub use log::{EventLog, LogRecord};
pub use message::{ControlMessage, FlowMod, FlowRemoved, FullTableError, Packet, PacketIn, PacketInReason, RemovalReason};
pub use routing::ReactiveRouting;
pub use table::{
    Action, EntryId, FlowEntry, FlowKey, FlowTable, Hit, InstallOutcome, NextHop, Origin, ACTIVE_PRIORITY,
    DISCOVERY_PRIORITY, ROUTING_PRIORITY,
};

/// Simulation clock in milliseconds since the start of the run.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(s: u64) -> Self {
        SimTime(s * 1000)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimTime((s * 1000.0).round() as u64)
    }

    pub fn from_millis(ms: u64) -> Self {
        SimTime(ms)
    }

    pub fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn plus_secs(self, s: u32) -> Self {
        SimTime(self.0 + u64::from(s) * 1000)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    /// Adds milliseconds.
    fn add(self, ms: u64) -> SimTime {
        SimTime(self.0 + ms)
    }
}

impl Sub for SimTime {
    type Output = u64;

    fn sub(self, rhs: SimTime) -> u64 {
        self.0.saturating_sub(rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}s", self.as_secs_f64())
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
