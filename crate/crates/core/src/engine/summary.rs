use serde::{Deserialize, Serialize};

use crate::accounting::SlotKind;
use crate::engine::trace::{EventKind, Trace};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCounts {
    pub idle: u64,
    pub success: u64,
    pub collision: u64,
}

impl SlotCounts {
    pub fn total(&self) -> u64 {
        self.idle + self.success + self.collision
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: u32,
    pub weight: f64,
    pub departures: u64,
    /// Delivered payload `W_k` in bits.
    pub service_bits: u64,
    pub throughput_bps: f64,
    /// Failed RTS attempts, including recollisions inside a CRP.
    pub collisions: u64,
}

/// Compact per-run digest, serialized as the run's JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub scheduler: String,
    pub elapsed_s: f64,
    pub departures: u64,
    pub agents: Vec<AgentSummary>,
    pub slots: SlotCounts,
    /// Mean pulse rounds per collision slot.
    pub mean_crp_rounds: f64,
    pub mean_crp_duration_us: f64,
    pub mean_collision_size: f64,
    /// Fraction of the run spent carrying successful payload bits.
    pub s_emp: f64,
    pub final_alpha: f64,
}

impl RunSummary {
    pub fn from_trace(trace: &Trace) -> Self {
        let sc = &trace.metadata.scenario;
        let n = sc.agents.len();
        let elapsed = trace.metadata.end.as_secs_f64();
        let mut agents: Vec<AgentSummary> = sc
            .agents
            .iter()
            .map(|a| AgentSummary {
                agent: a.id.0,
                weight: a.weight,
                departures: 0,
                service_bits: 0,
                throughput_bps: 0.0,
                collisions: 0,
            })
            .collect();
        let mut final_alpha = trace.metadata.alpha_policy.initial_alpha();
        for e in &trace.events {
            match e.kind {
                EventKind::Departure { agent, length_bits, .. } if agent.index() < n => {
                    agents[agent.index()].departures += 1;
                    agents[agent.index()].service_bits += length_bits;
                }
                EventKind::TxEnd { agent, success: false, .. } if agent.index() < n => {
                    agents[agent.index()].collisions += 1;
                }
                EventKind::AlphaUpdate { new, .. } => final_alpha = new,
                _ => {}
            }
        }
        let mut slots = SlotCounts::default();
        let (mut rounds, mut crp_ns, mut members) = (0u64, 0u64, 0u64);
        for s in &trace.slots {
            match s.kind {
                SlotKind::Idle => slots.idle += 1,
                SlotKind::Success => slots.success += 1,
                SlotKind::Collision => {
                    slots.collision += 1;
                    rounds += u64::from(s.crp_rounds);
                    crp_ns += s.crp_duration.0;
                    members += s.contenders.len() as u64;
                }
            }
        }
        let per_coll = |x: u64| {
            if slots.collision == 0 {
                0.0
            } else {
                x as f64 / slots.collision as f64
            }
        };
        let total_bits: u64 = agents.iter().map(|a| a.service_bits).sum();
        if elapsed > 0.0 {
            for a in &mut agents {
                a.throughput_bps = a.service_bits as f64 / elapsed;
            }
        }
        let s_emp = if elapsed > 0.0 {
            total_bits as f64 / sc.timing.data_rate as f64 / elapsed
        } else {
            0.0
        };
        RunSummary {
            seed: trace.metadata.seed,
            scheduler: trace.metadata.scheduler.as_str().to_string(),
            elapsed_s: elapsed,
            departures: agents.iter().map(|a| a.departures).sum(),
            agents,
            slots,
            mean_crp_rounds: per_coll(rounds),
            mean_crp_duration_us: per_coll(crp_ns) / 1e3,
            mean_collision_size: per_coll(members),
            s_emp,
            final_alpha,
        }
    }
}
