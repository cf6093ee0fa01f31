use std::net::Ipv4Addr;

use serde::Serialize;

use super::table::{FlowEntry, FlowKey, Origin};
use super::SimTime;
use crate::topology::SwitchId;

/// A single data packet. Only addresses and size matter to the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Packet {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub size: u32,
    pub at: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketInReason {
    TableMiss,
    /// A `ToController` entry matched; carries that entry's origin and key.
    Action { origin: Origin, key: FlowKey },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PacketIn {
    pub switch: SwitchId,
    pub packet: Packet,
    pub reason: PacketInReason,
    /// Position of `switch` on the packet's route.
    pub hop: usize,
}

impl PacketIn {
    pub fn is_table_miss(&self) -> bool {
        matches!(self.reason, PacketInReason::TableMiss)
    }

    pub fn trigger_origin(&self) -> Option<Origin> {
        match self.reason {
            PacketInReason::TableMiss => None,
            PacketInReason::Action { origin, .. } => Some(origin),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowMod {
    pub switch: SwitchId,
    pub entry: FlowEntry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    HardTimeout,
    IdleTimeout,
}

/// Final counters of an expired entry that carried the removal flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowRemoved {
    pub switch: SwitchId,
    pub entry: FlowEntry,
    pub reason: RemovalReason,
    pub at: SimTime,
}

/// Rejection of a flow-mod by a full table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("flow table of {switch} is full")]
pub struct FullTableError {
    pub switch: SwitchId,
    pub rejected: FlowEntry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    PacketIn(PacketIn),
    FlowMod(FlowMod),
    FlowRemoved(FlowRemoved),
    FullTableError(FullTableError),
}
