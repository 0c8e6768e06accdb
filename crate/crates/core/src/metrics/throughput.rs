use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::time::Tick;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub start: Tick,
    pub end: Tick,
    /// Delivered payload rate `T_k` per agent, bits per second.
    pub per_agent: Vec<f64>,
    pub total: f64,
    /// Payload airtime over interval length.
    pub s_emp: f64,
}

/// Payload throughput of departures with tick in `(start, end]`.
pub fn per_agent_throughput(trace: &Trace, interval: (Tick, Tick)) -> Result<ThroughputReport> {
    let (start, end) = interval;
    if end <= start {
        return Err(Error::EmptyInterval(start.0, end.0));
    }
    let sc = &trace.metadata.scenario;
    let mut bits = vec![0u64; sc.agents.len()];
    for d in trace.departures().filter(|d| d.tick > start && d.tick <= end) {
        let slot = bits
            .get_mut(d.agent.index())
            .ok_or(Error::UnknownAgent(d.agent))?;
        *slot += d.length_bits;
    }
    let secs = (end - start).as_secs_f64();
    let per_agent: Vec<f64> = bits.iter().map(|&b| b as f64 / secs).collect();
    let total: f64 = per_agent.iter().sum();
    Ok(ThroughputReport {
        start,
        end,
        s_emp: total / sc.timing.data_rate as f64,
        per_agent,
        total,
    })
}
