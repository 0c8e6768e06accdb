//! Service accounting: the network virtual clock, per-agent normalized
//! service and virtual times, and the service deviation derived from them.
//!
//! Service is measured in scheduler units (bytes) divided by the agent's
//! weight. Cumulative counts are kept as integers and divided on read, so
//! two readers of the same ledger state always see bit-identical values.
//!
//! Virtual times grow without bound (about `10^8` units after a minute at a
//! small α) while deviations stay within a few packet lengths, so clocks are
//! held as unevaluated double-f64 sums and deviations are taken before
//! rounding to a single f64.

use serde::{Deserialize, Serialize};

use crate::agent::AgentId;
use crate::error::{Error, Result};
use crate::time::Tick;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Idle,
    Success,
    Collision,
}

impl SlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotKind::Idle => "idle",
            SlotKind::Success => "success",
            SlotKind::Collision => "collision",
        }
    }
}

/// A virtual time held as `hi + lo` with `|lo|` below half an ulp of `hi`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualTime {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        VirtualTime { hi: x, lo: 0.0 }
    }

    /// `n / d`, carrying the division's rounding error in `lo`.
    pub fn quotient(n: f64, d: f64) -> Self {
        let q = n / d;
        let r = (-q).mul_add(d, n);
        VirtualTime::from_f64(q) + VirtualTime::from_f64(r / d)
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    /// `self - other`, rounded once.
    pub fn minus(self, other: VirtualTime) -> f64 {
        (self + VirtualTime { hi: -other.hi, lo: -other.lo }).value()
    }
}

impl std::ops::Add for VirtualTime {
    type Output = VirtualTime;
    fn add(self, rhs: VirtualTime) -> VirtualTime {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (hi, lo) = two_sum(s, e + self.lo + rhs.lo);
        VirtualTime { hi, lo }
    }
}

impl std::ops::Sub for VirtualTime {
    type Output = VirtualTime;
    fn sub(self, rhs: VirtualTime) -> VirtualTime {
        self + VirtualTime { hi: -rhs.hi, lo: -rhs.lo }
    }
}

/// Idle-slot counter scaled by the scaling factor.
///
/// With a fixed scaling factor the value is exactly `idle_slot_count / alpha`.
/// When the factor changes, the value accumulated so far is frozen and the
/// count restarts from the change point at the new rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkVirtualClock {
    idle_slot_count: u64,
    alpha: f64,
    base_value: VirtualTime,
    base_count: u64,
}

impl NetworkVirtualClock {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(NetworkVirtualClock {
            idle_slot_count: 0,
            alpha,
            base_value: VirtualTime::ZERO,
            base_count: 0,
        })
    }

    pub fn with_count(alpha: f64, idle_slot_count: u64) -> Result<Self> {
        let mut c = Self::new(alpha)?;
        c.idle_slot_count = idle_slot_count;
        Ok(c)
    }

    /// Returns the clock after one generalized slot of the given kind.
    pub fn advance(mut self, kind: SlotKind) -> Self {
        self.record(kind);
        self
    }

    pub fn record(&mut self, kind: SlotKind) {
        if kind == SlotKind::Idle {
            self.idle_slot_count += 1;
        }
    }

    pub fn record_idle_slots(&mut self, n: u64) {
        self.idle_slot_count += n;
    }

    pub fn value(&self) -> f64 {
        self.reading().value()
    }

    pub fn reading(&self) -> VirtualTime {
        self.base_value + VirtualTime::quotient((self.idle_slot_count - self.base_count) as f64, self.alpha)
    }

    pub fn idle_slot_count(&self) -> u64 {
        self.idle_slot_count
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        if alpha != self.alpha {
            self.base_value = self.reading();
            self.base_count = self.idle_slot_count;
            self.alpha = alpha;
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("must be positive, got {alpha}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAccount {
    weight: f64,
    service_bytes: u64,
    absent_offset: VirtualTime,
    backlogged: bool,
    backlog_start: Option<Tick>,
    backlog_intervals: Vec<(Tick, Tick)>,
}

impl AgentAccount {
    /// Cumulative service W_k in bits.
    pub fn service_bits(&self) -> u64 {
        self.service_bytes * 8
    }

    pub fn service_bytes(&self) -> u64 {
        self.service_bytes
    }

    /// Normalized service w_k = W_k / weight, in scheduler units.
    pub fn normalized_service(&self) -> f64 {
        self.service_bytes as f64 / self.weight
    }

    /// Agent virtual time v_k: tracks normalized service while backlogged
    /// and the network virtual time while absent.
    pub fn virtual_time(&self) -> f64 {
        self.virtual_reading().value()
    }

    pub fn virtual_reading(&self) -> VirtualTime {
        VirtualTime::quotient(self.service_bytes as f64, self.weight) + self.absent_offset
    }

    pub fn is_backlogged(&self) -> bool {
        self.backlogged
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Closed backlog intervals, plus the open one (ending at `now`) if any.
    pub fn backlog_intervals(&self, now: Tick) -> Vec<(Tick, Tick)> {
        let mut out = self.backlog_intervals.clone();
        if let Some(start) = self.backlog_start {
            out.push((start, now));
        }
        out
    }
}

/// Per-agent service accounts, indexed by agent id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceLedger {
    accounts: Vec<AgentAccount>,
}

impl ServiceLedger {
    /// One account per weight; agent `i` gets `weights[i]`. Every agent
    /// starts absent at tick 0.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let accounts = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if w.is_finite() && w > 0.0 {
                    Ok(AgentAccount {
                        weight: w,
                        service_bytes: 0,
                        absent_offset: VirtualTime::ZERO,
                        backlogged: false,
                        backlog_start: None,
                        backlog_intervals: Vec::new(),
                    })
                } else {
                    Err(Error::param(
                        "weight",
                        format!("agent {i} has non-positive weight {w}"),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ServiceLedger { accounts })
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    pub fn account(&self, agent: AgentId) -> Result<&AgentAccount> {
        self.accounts
            .get(agent.index())
            .ok_or(Error::UnknownAgent(agent))
    }

    fn account_mut(&mut self, agent: AgentId) -> Result<&mut AgentAccount> {
        self.accounts
            .get_mut(agent.index())
            .ok_or(Error::UnknownAgent(agent))
    }

    pub fn accounts(&self) -> &[AgentAccount] {
        &self.accounts
    }

    /// Credits a delivered packet of `length` scheduler units (bytes).
    pub fn record_service(&mut self, agent: AgentId, length: u64) -> Result<()> {
        let acc = self.account_mut(agent)?;
        acc.service_bytes += length;
        if !acc.backlogged {
            // v_k must not move for an absent agent.
            acc.absent_offset = acc.absent_offset - VirtualTime::quotient(length as f64, acc.weight);
        }
        Ok(())
    }

    /// Advances an absent agent's virtual time by the network's virtual time
    /// gained over the absence.
    pub fn sync_absent_agent(&mut self, agent: AgentId, v_interval: f64) -> Result<()> {
        let acc = self.account_mut(agent)?;
        if acc.backlogged {
            return Err(Error::AgentBacklogged(agent));
        }
        acc.absent_offset = acc.absent_offset + VirtualTime::from_f64(v_interval);
        Ok(())
    }

    /// [`Self::sync_absent_agent`] for the absence between two clock
    /// readings, without rounding the interval first.
    pub fn sync_absent_between(&mut self, agent: AgentId, from: VirtualTime, to: VirtualTime) -> Result<()> {
        let acc = self.account_mut(agent)?;
        if acc.backlogged {
            return Err(Error::AgentBacklogged(agent));
        }
        acc.absent_offset = acc.absent_offset + (to - from);
        Ok(())
    }

    pub fn mark_backlogged(&mut self, agent: AgentId, at: Tick) -> Result<()> {
        let acc = self.account_mut(agent)?;
        if !acc.backlogged {
            acc.backlogged = true;
            acc.backlog_start = Some(at);
        }
        Ok(())
    }

    pub fn mark_absent(&mut self, agent: AgentId, at: Tick) -> Result<()> {
        let acc = self.account_mut(agent)?;
        if acc.backlogged {
            acc.backlogged = false;
            if let Some(start) = acc.backlog_start.take() {
                acc.backlog_intervals.push((start, at));
            }
        }
        Ok(())
    }

    /// δ_k = v − v_k.
    pub fn service_deviation(&self, clock: &NetworkVirtualClock, agent: AgentId) -> Result<f64> {
        Ok(clock.reading().minus(self.account(agent)?.virtual_reading()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn idle_slot_adds_inverse_alpha() {
        let c = NetworkVirtualClock::new(0.04).unwrap().advance(SlotKind::Idle);
        assert!((c.value() - 25.0).abs() < 1e-12);
        let mut c = NetworkVirtualClock::new(0.04).unwrap();
        for _ in 0..10 {
            c = c.advance(SlotKind::Idle);
        }
        assert!((c.value() - 250.0).abs() < 1e-12);
    }

    #[test]
    fn busy_slots_leave_clock_alone() {
        let c = NetworkVirtualClock::with_count(0.04, 7).unwrap();
        let before = c.value();
        assert_eq!(c.advance(SlotKind::Success).value(), before);
        assert_eq!(c.advance(SlotKind::Collision).value(), before);
    }

    #[test]
    fn alpha_change_freezes_accumulated_value() {
        let mut c = NetworkVirtualClock::new(0.5).unwrap();
        c.record_idle_slots(4);
        c.set_alpha(0.25).unwrap();
        c.record_idle_slots(1);
        assert!((c.value() - 12.0).abs() < 1e-12);
        assert!(c.set_alpha(0.0).is_err());
    }

    #[test]
    fn record_service_normalizes_by_weight() {
        let mut l = ServiceLedger::new(&[8.0, 1.0]).unwrap();
        l.mark_backlogged(AgentId(0), Tick(0)).unwrap();
        l.mark_backlogged(AgentId(1), Tick(0)).unwrap();
        l.record_service(AgentId(0), 2016).unwrap();
        assert_eq!(l.account(AgentId(0)).unwrap().normalized_service(), 252.0);
        l.record_service(AgentId(1), 2016).unwrap();
        l.record_service(AgentId(1), 2016).unwrap();
        let a1 = l.account(AgentId(1)).unwrap();
        assert_eq!(a1.normalized_service(), 4032.0);
        assert_eq!(a1.service_bits(), 2 * 2016 * 8);
        assert_eq!(a1.virtual_time(), 4032.0);
    }

    #[test]
    fn zero_service_is_a_no_op() {
        let mut l = ServiceLedger::new(&[3.0]).unwrap();
        l.mark_backlogged(AgentId(0), Tick(0)).unwrap();
        let before = l.clone();
        l.record_service(AgentId(0), 0).unwrap();
        assert_eq!(l, before);
    }

    #[test]
    fn unknown_agent_errors() {
        let mut l = ServiceLedger::new(&[1.0]).unwrap();
        assert_eq!(l.record_service(AgentId(5), 1), Err(Error::UnknownAgent(AgentId(5))));
        let c = NetworkVirtualClock::new(1.0).unwrap();
        assert!(l.service_deviation(&c, AgentId(2)).is_err());
    }

    #[test]
    fn absent_sync() {
        let mut l = ServiceLedger::new(&[2.0]).unwrap();
        l.sync_absent_agent(AgentId(0), 5.0).unwrap();
        assert_eq!(l.account(AgentId(0)).unwrap().virtual_time(), 5.0);
        assert_eq!(l.account(AgentId(0)).unwrap().normalized_service(), 0.0);
        l.sync_absent_agent(AgentId(0), 0.0).unwrap();
        assert_eq!(l.account(AgentId(0)).unwrap().virtual_time(), 5.0);

        // 12 idle slots at alpha = 0.04
        let mut c = NetworkVirtualClock::new(0.04).unwrap();
        let v0 = c.value();
        c.record_idle_slots(12);
        l.sync_absent_agent(AgentId(0), c.value() - v0).unwrap();
        assert!((l.account(AgentId(0)).unwrap().virtual_time() - 305.0).abs() < 1e-9);

        l.mark_backlogged(AgentId(0), Tick(10)).unwrap();
        assert_eq!(
            l.sync_absent_agent(AgentId(0), 1.0),
            Err(Error::AgentBacklogged(AgentId(0)))
        );
    }

    #[test]
    fn deviation_survives_large_clocks() {
        let mut l = ServiceLedger::new(&[3.0]).unwrap();
        let mut c = NetworkVirtualClock::new(0.003).unwrap();
        l.mark_backlogged(AgentId(0), Tick(0)).unwrap();
        // Interleave 10^5 departures of 7 bytes with 700 idle slots each:
        // both clocks reach ~2.3e7 and the deviation comes back to exactly
        // 700/0.003 - 7/3 per step times the step count.
        for _ in 0..100_000 {
            c.record_idle_slots(7);
            l.record_service(AgentId(0), 7).unwrap();
        }
        let want = 100_000.0 * (7.0 / 0.003 - 7.0 / 3.0);
        let got = l.service_deviation(&c, AgentId(0)).unwrap();
        assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");

        let mut l = ServiceLedger::new(&[3.0]).unwrap();
        let mut c = NetworkVirtualClock::new(0.002).unwrap();
        c.record_idle_slots(123_456_789);
        let v0 = c.reading();
        c.record_idle_slots(1);
        l.sync_absent_between(AgentId(0), VirtualTime::ZERO, v0).unwrap();
        assert!((l.service_deviation(&c, AgentId(0)).unwrap() - 500.0).abs() < 1e-9);
    }

    #[test]
    fn deviation_is_clock_minus_agent_time() {
        let mut l = ServiceLedger::new(&[1.0]).unwrap();
        let c = NetworkVirtualClock::with_count(0.1, 10).unwrap(); // v = 100
        l.sync_absent_agent(AgentId(0), 97.5).unwrap();
        assert!((l.service_deviation(&c, AgentId(0)).unwrap() - 2.5).abs() < 1e-12);
        let mut l = ServiceLedger::new(&[1.0]).unwrap();
        l.sync_absent_agent(AgentId(0), 100.0).unwrap();
        // 0.1 is not a binary fraction, so the clock sits a hair below 100.
        assert!(l.service_deviation(&c, AgentId(0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_agent_first_departure_deviation() {
        // phi = 8, L = 2016, alpha = 0.04: backoff of 10 idle slots, then
        // the packet departs.
        let mut l = ServiceLedger::new(&[8.0]).unwrap();
        let mut c = NetworkVirtualClock::new(0.04).unwrap();
        l.mark_backlogged(AgentId(0), Tick(0)).unwrap();
        c.record_idle_slots(10);
        l.record_service(AgentId(0), 2016).unwrap();
        let d = l.service_deviation(&c, AgentId(0)).unwrap();
        assert!((d + 2.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn backlog_intervals_recorded() {
        let mut l = ServiceLedger::new(&[1.0]).unwrap();
        l.mark_backlogged(AgentId(0), Tick(5)).unwrap();
        l.mark_absent(AgentId(0), Tick(9)).unwrap();
        l.mark_backlogged(AgentId(0), Tick(12)).unwrap();
        let iv = l.account(AgentId(0)).unwrap().backlog_intervals(Tick(20));
        assert_eq!(iv, vec![(Tick(5), Tick(9)), (Tick(12), Tick(20))]);
    }

    proptest! {
        #[test]
        fn clock_and_ledger_are_monotone(
            kinds in proptest::collection::vec(0u8..3, 1..200),
            lens in proptest::collection::vec(0u64..4000, 1..200),
            alpha in 0.001f64..1.0,
        ) {
            let mut c = NetworkVirtualClock::new(alpha).unwrap();
            let mut l = ServiceLedger::new(&[3.0]).unwrap();
            l.mark_backlogged(AgentId(0), Tick(0)).unwrap();
            let mut prev_v = c.value();
            let mut prev_w = 0.0;
            let mut prev_vk = 0.0;
            for (k, len) in kinds.iter().zip(lens.iter().cycle()) {
                let kind = match k { 0 => SlotKind::Idle, 1 => SlotKind::Success, _ => SlotKind::Collision };
                c = c.advance(kind);
                if kind != SlotKind::Idle {
                    l.record_service(AgentId(0), *len).unwrap();
                }
                let a = l.account(AgentId(0)).unwrap();
                prop_assert!(c.value() >= prev_v);
                prop_assert!(a.normalized_service() >= prev_w);
                prop_assert!(a.virtual_time() >= prev_vk);
                prev_v = c.value();
                prev_w = a.normalized_service();
                prev_vk = a.virtual_time();
            }
        }
    }
}
