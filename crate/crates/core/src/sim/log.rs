use std::io::{self, Write};

use serde::Serialize;

use super::table::{FlowKey, Origin};
use super::SimTime;
use crate::topology::SwitchId;

/// One control-plane event, serialized as a JSON line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub t_ms: u64,
    pub kind: &'static str,
    pub switch: SwitchId,
    pub key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packets: Option<u64>,
}

/// Append-only control-event log. Disabled logs drop records.
#[derive(Clone, Debug, Default)]
pub struct EventLog {
    enabled: bool,
    records: Vec<LogRecord>,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            records: Vec::new(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub(crate) fn push(
        &mut self,
        at: SimTime,
        kind: &'static str,
        switch: SwitchId,
        key: &FlowKey,
        origin: Option<Origin>,
        packets: Option<u64>,
    ) {
        if self.enabled {
            self.records.push(LogRecord {
                t_ms: at.as_millis(),
                kind,
                switch,
                key: key.to_string(),
                origin,
                packets,
            });
        }
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn count(&self, kind: &str) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn write_json_lines<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_json_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_json_lines(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}
