//! Pulse-based splitting for collision resolution among class I agents.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::AgentId;
use crate::error::{Error, Result};

/// Pulse length drawn uniformly from `[(q−1)m+1, qm]` slots.
pub fn draw_split_pulse<R: Rng + ?Sized>(q: u32, m: u32, rng: &mut R) -> Result<u64> {
    let (lo, hi) = pulse_interval(q, m)?;
    Ok(rng.random_range(lo..=hi))
}

pub fn pulse_interval(q: u32, m: u32) -> Result<(u64, u64)> {
    if q == 0 {
        return Err(Error::param("q", "collision counter is 0; agent is not class I"));
    }
    if m == 0 {
        return Err(Error::param("m", "branch factor must be at least 1"));
    }
    let (q, m) = (q as u64, m as u64);
    Ok(((q - 1) * m + 1, q * m))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrpOutcome {
    Winner(AgentId),
    /// Tied longest pulses; these agents transmit together and collide.
    Recollision(Vec<AgentId>),
}

/// Resolves one pulse round: the unique longest pulse wins, a tie at the
/// maximum recollides.
pub fn crp_round(pulses: &[(AgentId, u64)]) -> Result<CrpOutcome> {
    let max = pulses.iter().map(|&(_, c)| c).max().ok_or(Error::EmptyRound)?;
    let mut top: Vec<AgentId> = pulses
        .iter()
        .filter(|&&(_, c)| c == max)
        .map(|&(a, _)| a)
        .collect();
    if top.len() == 1 {
        Ok(CrpOutcome::Winner(top[0]))
    } else {
        top.sort();
        Ok(CrpOutcome::Recollision(top))
    }
}
