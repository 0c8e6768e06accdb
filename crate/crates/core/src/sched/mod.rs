//! Per-agent scheduling policies: DSCFQ, and the two proportional-backoff
//! baselines.
//!
//! * `Dscfq`: compensated backoff tag plus splitting-based priority for
//!   agents whose last attempt collided.
//! * `TypeI`: proportional tag, BEB redraws after a collision, no priority.
//! * `TypeII`: proportional tag plus the same splitting priority as DSCFQ.

mod backoff;
mod beb;
mod splitting;

pub use backoff::{
    compute_backoff_dscfq, compute_backoff_type_proportional, update_compensation, BackoffTag,
    CompensationState,
};
pub use beb::{beb_draw, BebState};
pub use splitting::{crp_round, draw_split_pulse, pulse_interval, CrpOutcome};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Dscfq,
    #[serde(rename = "type1", alias = "typei")]
    TypeI,
    #[serde(rename = "type2", alias = "typeii")]
    TypeII,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::Dscfq, SchedulerKind::TypeII, SchedulerKind::TypeI];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Dscfq => "dscfq",
            SchedulerKind::TypeI => "type1",
            SchedulerKind::TypeII => "type2",
        }
    }

    /// Whether collided agents resolve through the pulse-splitting CRP.
    pub fn uses_splitting(self) -> bool {
        !matches!(self, SchedulerKind::TypeI)
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dscfq" => Ok(SchedulerKind::Dscfq),
            "type1" | "typei" => Ok(SchedulerKind::TypeI),
            "type2" | "typeii" => Ok(SchedulerKind::TypeII),
            other => Err(Error::param("algo", format!("unknown scheduler `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessClass {
    /// Retransmitting after a collision; contends through the CRP.
    I,
    /// Fresh packet; counts down its backoff tag.
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionCounter {
    pub q: u32,
    pub m: u32,
}

impl CollisionCounter {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "branch factor must be at least 1"));
        }
        Ok(CollisionCounter { q: 0, m })
    }
}

/// Scheduler state owned by one agent for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentScheduler {
    kind: SchedulerKind,
    weight: f64,
    class: AccessClass,
    counter: CollisionCounter,
    compensation: CompensationState,
    beb: BebState,
    tag: Option<BackoffTag>,
    clamped_tags: u64,
}

impl AgentScheduler {
    pub fn new(kind: SchedulerKind, weight: f64, m: u32, cw_min: u64, cw_max: u64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::param("weight", format!("must be positive, got {weight}")));
        }
        Ok(AgentScheduler {
            kind,
            weight,
            class: AccessClass::II,
            counter: CollisionCounter::new(m)?,
            compensation: CompensationState::default(),
            beb: BebState::new(cw_min, cw_max)?,
            tag: None,
            clamped_tags: 0,
        })
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn class(&self) -> AccessClass {
        self.class
    }

    pub fn collision_count(&self) -> u32 {
        self.counter.q
    }

    pub fn epsilon(&self) -> f64 {
        self.compensation.epsilon
    }

    pub fn compensation(&self) -> CompensationState {
        self.compensation
    }

    pub fn contention_window(&self) -> u64 {
        self.beb.cw
    }

    pub fn current_tag(&self) -> Option<BackoffTag> {
        self.tag
    }

    /// Number of DSCFQ tags that had a negative floor argument and were
    /// clamped to zero. Always zero unless the compensation state is corrupt.
    pub fn clamped_tags(&self) -> u64 {
        self.clamped_tags
    }

    /// Tags the packet that just reached the head of the queue.
    pub fn tag_packet(&mut self, len: u64, alpha: f64) -> Result<BackoffTag> {
        let tag = match self.kind {
            SchedulerKind::Dscfq => {
                match compute_backoff_dscfq(len, self.weight, alpha, self.compensation.epsilon) {
                    Ok(t) => t,
                    Err(Error::NegativeBackoff { floor_arg }) => {
                        log::warn!(
                            "negative backoff floor argument {floor_arg} (epsilon {}); clamping to 0",
                            self.compensation.epsilon
                        );
                        self.clamped_tags += 1;
                        BackoffTag::raw(0, alpha)
                    }
                    Err(e) => return Err(e),
                }
            }
            SchedulerKind::TypeI | SchedulerKind::TypeII => {
                compute_backoff_type_proportional(len, self.weight, alpha)?
            }
        };
        self.tag = Some(tag);
        Ok(tag)
    }

    /// Handles a collided attempt. Splitting policies move to class I and
    /// bump the collision counter; Type I doubles its window and returns the
    /// redrawn BEB backoff.
    pub fn on_collision<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u64> {
        match self.kind {
            SchedulerKind::Dscfq | SchedulerKind::TypeII => {
                self.counter.q += 1;
                self.class = AccessClass::I;
                None
            }
            SchedulerKind::TypeI => {
                self.beb.on_collision();
                Some(self.beb.draw(rng))
            }
        }
    }

    /// Handles a completed frame exchange of `len` units at fixed scale.
    pub fn on_success(&mut self, len: u64) {
        self.reset_after_success();
        if self.kind == SchedulerKind::Dscfq {
            if let Some(tag) = self.tag {
                self.compensation =
                    update_compensation(self.compensation, &tag, tag.alpha(), len, self.weight);
            }
        }
        self.tag = None;
    }

    /// Success under a time-varying scale: the next compensation factor is
    /// the deviation the agent tracked at this departure.
    pub fn on_success_tracked(&mut self, deviation: f64) {
        self.reset_after_success();
        if self.kind == SchedulerKind::Dscfq {
            self.compensation = CompensationState {
                epsilon: deviation,
                packet_index: self.compensation.packet_index + 1,
            };
        }
        self.tag = None;
    }

    fn reset_after_success(&mut self) {
        self.counter.q = 0;
        self.class = AccessClass::II;
        if self.kind == SchedulerKind::TypeI {
            self.beb.on_success();
        }
    }

    pub fn draw_pulse<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        draw_split_pulse(self.counter.q, self.counter.m, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sched(kind: SchedulerKind) -> AgentScheduler {
        AgentScheduler::new(kind, 8.0, 2, 15, 1023).unwrap()
    }

    #[test]
    fn dscfq_collision_enters_class_one() {
        let mut s = sched(SchedulerKind::Dscfq);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.on_collision(&mut rng), None);
        assert_eq!(s.collision_count(), 1);
        assert_eq!(s.class(), AccessClass::I);
    }

    #[test]
    fn type2_collision_enters_class_one() {
        let mut s = sched(SchedulerKind::TypeII);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.on_collision(&mut rng), None);
        assert_eq!(s.collision_count(), 1);
        assert_eq!(s.class(), AccessClass::I);
    }

    #[test]
    fn type1_collision_doubles_window() {
        let mut s = sched(SchedulerKind::TypeI);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        s.on_collision(&mut rng);
        assert_eq!(s.contention_window(), 31);
        let b = s.on_collision(&mut rng).unwrap();
        assert_eq!(s.contention_window(), 63);
        assert!(b <= 63);
        assert_eq!(s.class(), AccessClass::II);
        assert_eq!(s.collision_count(), 0);
    }

    #[test]
    fn success_resets_counters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = sched(SchedulerKind::Dscfq);
        s.tag_packet(2016, 0.04).unwrap();
        for _ in 0..3 {
            s.on_collision(&mut rng);
        }
        assert_eq!(s.collision_count(), 3);
        s.on_success(2016);
        assert_eq!(s.collision_count(), 0);
        assert_eq!(s.class(), AccessClass::II);
        assert!((s.epsilon() + 2.0).abs() < 1e-9);

        let mut s = sched(SchedulerKind::Dscfq);
        s.tag_packet(2016, 0.04).unwrap();
        s.on_success(2016);
        assert_eq!(s.collision_count(), 0);

        let mut t = sched(SchedulerKind::TypeI);
        for _ in 0..4 {
            t.on_collision(&mut rng);
        }
        assert_eq!(t.contention_window(), 255);
        t.on_success(2016);
        assert_eq!(t.contention_window(), 15);
    }

    #[test]
    fn baselines_keep_zero_epsilon() {
        for kind in [SchedulerKind::TypeI, SchedulerKind::TypeII] {
            let mut s = sched(kind);
            for len in [1000, 2016, 3000] {
                let t = s.tag_packet(len, 0.04).unwrap();
                assert_eq!(t.slots, (0.04 * len as f64 / 8.0).floor() as u64);
                s.on_success(len);
                assert_eq!(s.epsilon(), 0.0);
            }
        }
    }

    #[test]
    fn pulses_follow_collision_counter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = sched(SchedulerKind::Dscfq);
        assert!(s.draw_pulse(&mut rng).is_err());
        s.on_collision(&mut rng);
        s.on_collision(&mut rng);
        let c = s.draw_pulse(&mut rng).unwrap();
        assert!((3..=4).contains(&c));
    }

    #[test]
    fn parses_kinds() {
        assert_eq!("DSCFQ".parse::<SchedulerKind>().unwrap(), SchedulerKind::Dscfq);
        assert_eq!("type1".parse::<SchedulerKind>().unwrap(), SchedulerKind::TypeI);
        assert_eq!("type2".parse::<SchedulerKind>().unwrap(), SchedulerKind::TypeII);
        assert!("fifo".parse::<SchedulerKind>().is_err());
        let j = serde_json::to_string(&SchedulerKind::TypeII).unwrap();
        assert_eq!(j, "\"type2\"");
    }
}
