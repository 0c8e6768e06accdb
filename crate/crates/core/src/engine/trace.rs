//! Canonical run output: an ordered event log plus per-slot records.
//!
//! CSV layout, one event per row:
//!
//! ```text
//! tick_ns,event,agent,seq,length_bits,slot_index,v,delta,value
//! ```
//!
//! `v` is the network virtual time at the event. `delta` is the departing
//! agent's service deviation and is only set on `departure` rows. `value`
//! carries the event-specific number: the backoff tag on `tx_start`, the
//! compensation factor used for the packet on DSCFQ `departure`, the pulse
//! length on `crp_pulse`, and the new scaling factor on `alpha_update`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::accounting::SlotKind;
use crate::agent::AgentId;
use crate::engine::scenario::{AlphaPolicy, Scenario};
use crate::error::{Error, Result};
use crate::sched::SchedulerKind;
use crate::time::Tick;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    SlotStart {
        kind: SlotKind,
    },
    TxStart {
        agent: AgentId,
        seq: u64,
        tag: u64,
    },
    TxEnd {
        agent: AgentId,
        seq: u64,
        success: bool,
    },
    Departure {
        agent: AgentId,
        seq: u64,
        length_bits: u64,
        delta: f64,
        epsilon: Option<f64>,
    },
    CrpPulse {
        agent: AgentId,
        pulse: u64,
    },
    AlphaUpdate {
        old: f64,
        new: f64,
    },
    BacklogStart {
        agent: AgentId,
    },
    BacklogEnd {
        agent: AgentId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: Tick,
    pub slot_index: u64,
    pub v: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedSlotRecord {
    pub index: u64,
    pub kind: SlotKind,
    pub start: Tick,
    pub duration: Tick,
    pub contenders: Vec<AgentId>,
    pub winner: Option<AgentId>,
    pub crp_rounds: u32,
    /// Time spent in pulse rounds after the initial collided RTS.
    pub crp_duration: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub alpha_policy: AlphaPolicy,
    pub duration: Tick,
    /// Tick at which the run actually stopped.
    pub end: Tick,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub metadata: TraceMetadata,
    pub events: Vec<TraceEvent>,
    pub slots: Vec<GeneralizedSlotRecord>,
}

/// A delivered packet, as read back from the event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure {
    pub tick: Tick,
    pub agent: AgentId,
    pub seq: u64,
    pub length_bits: u64,
    pub slot_index: u64,
    pub v: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
}

impl Trace {
    pub fn departures(&self) -> impl Iterator<Item = Departure> + '_ {
        departures_of(&self.events)
    }

    pub fn departure_count(&self) -> usize {
        self.departures().count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_events_csv(&self.events, w)
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }
}

pub fn departures_of(events: &[TraceEvent]) -> impl Iterator<Item = Departure> + '_ {
    events.iter().filter_map(|e| match e.kind {
        EventKind::Departure {
            agent,
            seq,
            length_bits,
            delta,
            epsilon,
        } => Some(Departure {
            tick: e.tick,
            agent,
            seq,
            length_bits,
            slot_index: e.slot_index,
            v: e.v,
            delta,
            epsilon,
        }),
        _ => None,
    })
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CsvRow {
    tick_ns: u64,
    event: String,
    agent: Option<u32>,
    seq: Option<u64>,
    length_bits: Option<u64>,
    slot_index: u64,
    v: f64,
    delta: Option<f64>,
    value: Option<f64>,
}

fn to_row(e: &TraceEvent) -> CsvRow {
    let mut row = CsvRow {
        tick_ns: e.tick.0,
        slot_index: e.slot_index,
        v: e.v,
        ..CsvRow::default()
    };
    match e.kind {
        EventKind::SlotStart { kind } => {
            row.event = format!("slot_{}", kind.as_str());
        }
        EventKind::TxStart { agent, seq, tag } => {
            row.event = "tx_start".into();
            row.agent = Some(agent.0);
            row.seq = Some(seq);
            row.value = Some(tag as f64);
        }
        EventKind::TxEnd { agent, seq, success } => {
            row.event = if success { "tx_end_success" } else { "tx_end_collision" }.into();
            row.agent = Some(agent.0);
            row.seq = Some(seq);
        }
        EventKind::Departure {
            agent,
            seq,
            length_bits,
            delta,
            epsilon,
        } => {
            row.event = "departure".into();
            row.agent = Some(agent.0);
            row.seq = Some(seq);
            row.length_bits = Some(length_bits);
            row.delta = Some(delta);
            row.value = epsilon;
        }
        EventKind::CrpPulse { agent, pulse } => {
            row.event = "crp_pulse".into();
            row.agent = Some(agent.0);
            row.value = Some(pulse as f64);
        }
        EventKind::AlphaUpdate { old: _, new } => {
            row.event = "alpha_update".into();
            row.value = Some(new);
        }
        EventKind::BacklogStart { agent } => {
            row.event = "backlog_start".into();
            row.agent = Some(agent.0);
        }
        EventKind::BacklogEnd { agent } => {
            row.event = "backlog_end".into();
            row.agent = Some(agent.0);
        }
    }
    row
}

pub fn write_events_csv<W: Write>(events: &[TraceEvent], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for e in events {
        wtr.serialize(to_row(e)).map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Parses a CSV event log. `initial_alpha` seeds the `old` field of the
/// first `alpha_update` row, which the CSV does not carry.
pub fn read_events_csv<R: Read>(r: R, initial_alpha: f64) -> Result<Vec<TraceEvent>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    let mut alpha = initial_alpha;
    for (line, rec) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = rec.map_err(|e| Error::Io(e.to_string()))?;
        let need_agent = || {
            row.agent
                .map(AgentId)
                .ok_or_else(|| Error::Io(format!("row {}: `{}` without agent", line + 1, row.event)))
        };
        let need = |v: Option<u64>, what: &str| {
            v.ok_or_else(|| Error::Io(format!("row {}: `{}` without {what}", line + 1, row.event)))
        };
        let kind = match row.event.as_str() {
            "slot_idle" => EventKind::SlotStart { kind: SlotKind::Idle },
            "slot_success" => EventKind::SlotStart { kind: SlotKind::Success },
            "slot_collision" => EventKind::SlotStart { kind: SlotKind::Collision },
            "tx_start" => EventKind::TxStart {
                agent: need_agent()?,
                seq: need(row.seq, "seq")?,
                tag: row.value.unwrap_or(0.0) as u64,
            },
            "tx_end_success" | "tx_end_collision" => EventKind::TxEnd {
                agent: need_agent()?,
                seq: need(row.seq, "seq")?,
                success: row.event == "tx_end_success",
            },
            "departure" => EventKind::Departure {
                agent: need_agent()?,
                seq: need(row.seq, "seq")?,
                length_bits: need(row.length_bits, "length_bits")?,
                delta: row.delta.ok_or(Error::MissingSnapshot("departure delta"))?,
                epsilon: row.value,
            },
            "crp_pulse" => EventKind::CrpPulse {
                agent: need_agent()?,
                pulse: row.value.unwrap_or(0.0) as u64,
            },
            "alpha_update" => {
                let new = row
                    .value
                    .ok_or_else(|| Error::Io(format!("row {}: alpha_update without value", line + 1)))?;
                let old = alpha;
                alpha = new;
                EventKind::AlphaUpdate { old, new }
            }
            "backlog_start" => EventKind::BacklogStart { agent: need_agent()? },
            "backlog_end" => EventKind::BacklogEnd { agent: need_agent()? },
            other => return Err(Error::Io(format!("row {}: unknown event `{other}`", line + 1))),
        };
        out.push(TraceEvent {
            tick: Tick(row.tick_ns),
            slot_index: row.slot_index,
            v: row.v,
            kind,
        });
    }
    Ok(out)
}
