//! Slot-level discrete-event simulation of the shared medium.
//!
//! Time advances one generalized slot at a time. At each slot boundary every
//! backlogged class II agent whose backoff has run out transmits:
//!
//! * nobody: an idle slot of length σ; the virtual clock ticks and every
//!   waiting class II counter decrements;
//! * one agent: a success slot, `T_s` followed by the post-busy gap;
//! * several: a collision slot, which for the splitting policies contains the
//!   whole collision resolution period.
//!
//! Class I agents only exist inside a collision slot, so class II never
//! contends with them.

use std::collections::VecDeque;

use rand_distr::{Distribution, Exp};

use crate::accounting::{NetworkVirtualClock, ServiceLedger, SlotKind, VirtualTime};
use crate::agent::{AgentId, LengthModel};
use crate::analysis::AdaptiveAlphaController;
use crate::engine::scenario::{AlphaPolicy, Scenario};
use crate::engine::timing::{frame_exchange_duration, TimingParams};
use crate::engine::trace::{EventKind, GeneralizedSlotRecord, Trace, TraceEvent, TraceMetadata};
use crate::error::{Error, Result};
use crate::rng::{substream, SimRng, Stream};
use crate::sched::{crp_round, AccessClass, AgentScheduler, CrpOutcome, SchedulerKind};
use crate::time::Tick;

const MAX_CRP_ROUNDS: u32 = 100_000;

/// One member of a collision set, borrowed from the simulator for the
/// duration of the collision phase.
pub struct Contender<'a> {
    pub id: AgentId,
    pub sched: &'a mut AgentScheduler,
    pub rng: &'a mut SimRng,
    pub seq: u64,
    pub length_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseEvent {
    TxStart { tick: Tick, agent: AgentId, seq: u64, tag: u64 },
    TxEnd { tick: Tick, agent: AgentId, seq: u64, success: bool },
    Pulse { tick: Tick, agent: AgentId, pulse: u64 },
    Departure { tick: Tick, agent: AgentId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionPhase {
    pub record: GeneralizedSlotRecord,
    /// Time-ordered medium events within the slot.
    pub events: Vec<PhaseEvent>,
    /// Agents in departure order.
    pub departures: Vec<(AgentId, Tick)>,
    /// Type I only: the BEB backoff each contender redrew.
    pub redraws: Vec<(AgentId, u64)>,
}

/// Runs one collision generalized slot starting at `start`.
///
/// Splitting policies waste one collided RTS, then run pulse rounds until
/// every contender has delivered its packet. Type I wastes the collided RTS
/// and leaves each contender with a fresh BEB backoff.
pub fn collision_phase(
    contenders: &mut [Contender<'_>],
    kind: SchedulerKind,
    timing: &TimingParams,
    start: Tick,
    slot_index: u64,
) -> Result<CollisionPhase> {
    if contenders.len() < 2 {
        return Err(Error::NotACollision(contenders.len()));
    }
    let mut events = Vec::new();
    let mut departures = Vec::new();
    let mut redraws = Vec::new();
    let waste = timing.collided_rts_waste();

    for c in contenders.iter() {
        events.push(PhaseEvent::TxStart {
            tick: start,
            agent: c.id,
            seq: c.seq,
            tag: c.sched.current_tag().map_or(0, |t| t.slots),
        });
    }
    let mut t = start + waste;
    for c in contenders.iter_mut() {
        events.push(PhaseEvent::TxEnd {
            tick: t,
            agent: c.id,
            seq: c.seq,
            success: false,
        });
        if let Some(b) = c.sched.on_collision(c.rng) {
            redraws.push((c.id, b));
        }
    }
    let crp_start = t;
    let mut rounds = 0u32;

    if kind.uses_splitting() {
        let mut remaining: Vec<usize> = (0..contenders.len()).collect();
        while !remaining.is_empty() {
            rounds += 1;
            if rounds > MAX_CRP_ROUNDS {
                return Err(Error::InvalidScenario(
                    "collision resolution did not terminate".into(),
                ));
            }
            t += timing.crp_gap();
            let mut pulses = Vec::with_capacity(remaining.len());
            for &i in &remaining {
                let c = &mut contenders[i];
                let pulse = c.sched.draw_pulse(c.rng)?;
                events.push(PhaseEvent::Pulse {
                    tick: t,
                    agent: c.id,
                    pulse,
                });
                pulses.push((c.id, pulse));
            }
            let longest = pulses.iter().map(|p| p.1).max().unwrap_or(0);
            t += Tick(longest * timing.sigma.0);
            match crp_round(&pulses)? {
                CrpOutcome::Winner(w) => {
                    let pos = remaining
                        .iter()
                        .position(|&i| contenders[i].id == w)
                        .expect("winner is a remaining contender");
                    let c = &contenders[remaining.remove(pos)];
                    let ts = frame_exchange_duration(c.length_bytes * 8, timing);
                    events.push(PhaseEvent::TxStart {
                        tick: t,
                        agent: c.id,
                        seq: c.seq,
                        tag: c.sched.current_tag().map_or(0, |t| t.slots),
                    });
                    t += ts;
                    events.push(PhaseEvent::TxEnd {
                        tick: t,
                        agent: c.id,
                        seq: c.seq,
                        success: true,
                    });
                    events.push(PhaseEvent::Departure { tick: t, agent: c.id });
                    departures.push((c.id, t));
                }
                CrpOutcome::Recollision(tied) => {
                    for &i in &remaining {
                        let c = &contenders[i];
                        if tied.contains(&c.id) {
                            events.push(PhaseEvent::TxStart {
                                tick: t,
                                agent: c.id,
                                seq: c.seq,
                                tag: c.sched.current_tag().map_or(0, |t| t.slots),
                            });
                        }
                    }
                    t += waste;
                    for &i in &remaining {
                        let c = &mut contenders[i];
                        if tied.contains(&c.id) {
                            events.push(PhaseEvent::TxEnd {
                                tick: t,
                                agent: c.id,
                                seq: c.seq,
                                success: false,
                            });
                            c.sched.on_collision(c.rng);
                        }
                    }
                }
            }
        }
    }
    let crp_duration = t - crp_start;
    t += timing.post_busy_gap();

    let mut ids: Vec<AgentId> = contenders.iter().map(|c| c.id).collect();
    ids.sort();
    Ok(CollisionPhase {
        record: GeneralizedSlotRecord {
            index: slot_index,
            kind: SlotKind::Collision,
            start,
            duration: t - start,
            contenders: ids,
            winner: None,
            crp_rounds: rounds,
            crp_duration,
        },
        events,
        departures,
        redraws,
    })
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    seq: u64,
    len: u64,
}

struct AgentRt {
    id: AgentId,
    weight: f64,
    saturated: bool,
    length_model: LengthModel,
    arrivals: Option<Exp<f64>>,
    sched: AgentScheduler,
    len_rng: SimRng,
    arr_rng: SimRng,
    cont_rng: SimRng,
    backlogged: bool,
    head: Option<Packet>,
    queue: VecDeque<Packet>,
    next_seq: u64,
    next_arrival: Option<Tick>,
    /// Idle slots left before transmitting (counter mode).
    countdown: u64,
    /// Normalized length of the head packet (virtual mode): the agent
    /// transmits once its deviation would pass this within one more idle slot.
    need: f64,
    absent_since_v: VirtualTime,
}

impl AgentRt {
    fn new_packet(&mut self) -> Packet {
        let p = Packet {
            seq: self.next_seq,
            len: self.length_model.sample(&mut self.len_rng),
        };
        self.next_seq += 1;
        p
    }

    fn draw_gap(&mut self) -> Option<Tick> {
        self.arrivals
            .as_ref()
            .map(|d| Tick::from_secs_f64(d.sample(&mut self.arr_rng)).max(Tick(1)))
    }
}

struct Simulator<'s> {
    scenario: &'s Scenario,
    timing: TimingParams,
    agents: Vec<AgentRt>,
    clock: NetworkVirtualClock,
    ledger: ServiceLedger,
    controller: Option<AdaptiveAlphaController>,
    virtual_countdown: bool,
    now: Tick,
    slot_index: u64,
    departures: u64,
    events: Vec<TraceEvent>,
    slots: Vec<GeneralizedSlotRecord>,
}

/// Runs a scenario to completion and returns its trace. A zero duration
/// yields an empty trace carrying only metadata.
pub fn run_simulation(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let mut sim = Simulator::new(scenario)?;
    sim.run()?;
    Ok(sim.into_trace())
}

impl<'s> Simulator<'s> {
    fn new(scenario: &'s Scenario) -> Result<Self> {
        let alpha = scenario.alpha_policy.initial_alpha();
        let agents = scenario
            .agents
            .iter()
            .map(|spec| {
                let sched = AgentScheduler::new(
                    scenario.scheduler,
                    spec.weight,
                    scenario.m,
                    scenario.cw_min,
                    scenario.cw_max,
                )?;
                let arrivals = if spec.always_backlogged {
                    None
                } else {
                    let rate = spec.arrival_rate.unwrap_or(1.0);
                    Some(Exp::new(rate).map_err(|e| Error::param("arrival_rate", e.to_string()))?)
                };
                Ok(AgentRt {
                    id: spec.id,
                    weight: spec.weight,
                    saturated: spec.always_backlogged,
                    length_model: spec.packet_length,
                    arrivals,
                    sched,
                    len_rng: substream(scenario.seed, spec.id, Stream::PacketLength),
                    arr_rng: substream(scenario.seed, spec.id, Stream::Arrival),
                    cont_rng: substream(scenario.seed, spec.id, Stream::Contention),
                    backlogged: false,
                    head: None,
                    queue: VecDeque::new(),
                    next_seq: 1,
                    next_arrival: None,
                    countdown: 0,
                    need: 0.0,
                    absent_since_v: VirtualTime::ZERO,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let controller = match scenario.alpha_policy {
            AlphaPolicy::Fixed { .. } => None,
            AlphaPolicy::Adaptive {
                alpha0,
                gamma,
                beta,
                alpha_min,
                alpha_max,
            } => Some(AdaptiveAlphaController::new(alpha0, beta, gamma, alpha_min, alpha_max)?),
        };
        Ok(Simulator {
            scenario,
            timing: scenario.timing,
            agents,
            clock: NetworkVirtualClock::new(alpha)?,
            ledger: ServiceLedger::new(&scenario.weights())?,
            virtual_countdown: controller.is_some() && scenario.scheduler == SchedulerKind::Dscfq,
            controller,
            now: Tick::ZERO,
            slot_index: 0,
            departures: 0,
            events: Vec::new(),
            slots: Vec::new(),
        })
    }

    fn push(&mut self, tick: Tick, kind: EventKind) {
        self.events.push(TraceEvent {
            tick,
            slot_index: self.slot_index,
            v: self.clock.value(),
            kind,
        });
    }

    fn done(&self) -> bool {
        self.now >= self.scenario.duration
            || self
                .scenario
                .max_departures
                .is_some_and(|m| self.departures >= m)
    }

    fn run(&mut self) -> Result<()> {
        if self.scenario.duration == Tick::ZERO {
            return Ok(());
        }
        for i in 0..self.agents.len() {
            if self.agents[i].saturated {
                let p = self.agents[i].new_packet();
                self.become_backlogged(i, p)?;
            } else {
                self.agents[i].next_arrival = self.agents[i].draw_gap();
            }
        }
        while !self.done() {
            self.admit_arrivals()?;
            let ready: Vec<usize> = (0..self.agents.len()).filter(|&i| self.is_ready(i)).collect();
            let start = self.now;
            let kind = match ready.len() {
                0 => self.idle_slot(),
                1 => self.success_slot(ready[0])?,
                _ => self.collision_slot(&ready)?,
            };
            let end = start + self.slots.last().map_or(Tick::ZERO, |s| s.duration);
            self.now = end;
            if let Some(ctrl) = self.controller.as_mut() {
                let old = ctrl.alpha();
                ctrl.update(kind);
                let new = ctrl.alpha();
                if new != old {
                    self.clock.set_alpha(new)?;
                    self.push(end, EventKind::AlphaUpdate { old, new });
                }
            }
            self.slot_index += 1;
        }
        Ok(())
    }

    fn alpha(&self) -> f64 {
        self.clock.alpha()
    }

    fn is_ready(&self, i: usize) -> bool {
        let a = &self.agents[i];
        if !a.backlogged || a.head.is_none() || a.sched.class() != AccessClass::II {
            return false;
        }
        if self.virtual_countdown {
            self.ledger
                .service_deviation(&self.clock, a.id)
                .is_ok_and(|d| d + 1.0 / self.alpha() > a.need)
        } else {
            a.countdown == 0
        }
    }

    fn admit_arrivals(&mut self) -> Result<()> {
        for i in 0..self.agents.len() {
            while let Some(at) = self.agents[i].next_arrival.filter(|&t| t <= self.now) {
                let p = self.agents[i].new_packet();
                let gap = self.agents[i].draw_gap().unwrap_or(Tick(1));
                self.agents[i].next_arrival = Some(at + gap);
                if self.agents[i].backlogged {
                    self.agents[i].queue.push_back(p);
                } else {
                    let since = self.agents[i].absent_since_v;
                    self.ledger
                        .sync_absent_between(self.agents[i].id, since, self.clock.reading())?;
                    self.become_backlogged(i, p)?;
                }
            }
        }
        Ok(())
    }

    fn become_backlogged(&mut self, i: usize, p: Packet) -> Result<()> {
        let id = self.agents[i].id;
        self.agents[i].backlogged = true;
        self.ledger.mark_backlogged(id, self.now)?;
        self.push(self.now, EventKind::BacklogStart { agent: id });
        self.start_head(i, p)
    }

    fn start_head(&mut self, i: usize, p: Packet) -> Result<()> {
        let alpha = self.alpha();
        let a = &mut self.agents[i];
        let tag = a.sched.tag_packet(p.len, alpha)?;
        a.countdown = tag.slots;
        a.need = p.len as f64 / a.weight;
        a.head = Some(p);
        Ok(())
    }

    fn idle_slot(&mut self) -> SlotKind {
        self.push(self.now, EventKind::SlotStart { kind: SlotKind::Idle });
        self.clock.record(SlotKind::Idle);
        for a in &mut self.agents {
            if a.backlogged && a.head.is_some() && a.sched.class() == AccessClass::II {
                a.countdown = a.countdown.saturating_sub(1);
            }
        }
        self.slots.push(GeneralizedSlotRecord {
            index: self.slot_index,
            kind: SlotKind::Idle,
            start: self.now,
            duration: self.timing.sigma,
            contenders: Vec::new(),
            winner: None,
            crp_rounds: 0,
            crp_duration: Tick::ZERO,
        });
        SlotKind::Idle
    }

    fn success_slot(&mut self, i: usize) -> Result<SlotKind> {
        let start = self.now;
        let id = self.agents[i].id;
        let p = self.agents[i].head.expect("ready agent has a head packet");
        let tag = self.agents[i].sched.current_tag().map_or(0, |t| t.slots);
        self.push(start, EventKind::SlotStart { kind: SlotKind::Success });
        self.push(start, EventKind::TxStart { agent: id, seq: p.seq, tag });
        let end_tx = start + frame_exchange_duration(p.len * 8, &self.timing);
        self.push(end_tx, EventKind::TxEnd { agent: id, seq: p.seq, success: true });
        self.depart(i, end_tx)?;
        self.slots.push(GeneralizedSlotRecord {
            index: self.slot_index,
            kind: SlotKind::Success,
            start,
            duration: end_tx - start + self.timing.post_busy_gap(),
            contenders: vec![id],
            winner: Some(id),
            crp_rounds: 0,
            crp_duration: Tick::ZERO,
        });
        Ok(SlotKind::Success)
    }

    fn collision_slot(&mut self, ready: &[usize]) -> Result<SlotKind> {
        let start = self.now;
        self.push(start, EventKind::SlotStart { kind: SlotKind::Collision });
        let phase = {
            let mut contenders: Vec<Contender<'_>> = self
                .agents
                .iter_mut()
                .enumerate()
                .filter(|(i, _)| ready.contains(i))
                .map(|(_, a)| {
                    let p = a.head.expect("ready agent has a head packet");
                    Contender {
                        id: a.id,
                        sched: &mut a.sched,
                        rng: &mut a.cont_rng,
                        seq: p.seq,
                        length_bytes: p.len,
                    }
                })
                .collect();
            collision_phase(
                &mut contenders,
                self.scenario.scheduler,
                &self.timing,
                start,
                self.slot_index,
            )?
        };
        for ev in &phase.events {
            match *ev {
                PhaseEvent::TxStart { tick, agent, seq, tag } => {
                    self.push(tick, EventKind::TxStart { agent, seq, tag })
                }
                PhaseEvent::TxEnd { tick, agent, seq, success } => {
                    self.push(tick, EventKind::TxEnd { agent, seq, success })
                }
                PhaseEvent::Pulse { tick, agent, pulse } => {
                    self.push(tick, EventKind::CrpPulse { agent, pulse })
                }
                PhaseEvent::Departure { tick, agent } => self.depart(agent.index(), tick)?,
            }
        }
        for &(agent, backoff) in &phase.redraws {
            self.agents[agent.index()].countdown = backoff;
        }
        self.slots.push(phase.record);
        Ok(SlotKind::Collision)
    }

    fn depart(&mut self, i: usize, tick: Tick) -> Result<()> {
        let id = self.agents[i].id;
        let p = self.agents[i].head.take().expect("departing agent has a head packet");
        let epsilon = (self.scenario.scheduler == SchedulerKind::Dscfq)
            .then(|| self.agents[i].sched.epsilon());
        self.ledger.record_service(id, p.len)?;
        let delta = self.ledger.service_deviation(&self.clock, id)?;
        self.push(
            tick,
            EventKind::Departure {
                agent: id,
                seq: p.seq,
                length_bits: p.len * 8,
                delta,
                epsilon,
            },
        );
        if self.virtual_countdown {
            self.agents[i].sched.on_success_tracked(delta);
        } else {
            self.agents[i].sched.on_success(p.len);
        }
        self.departures += 1;

        let next = if self.agents[i].saturated {
            Some(self.agents[i].new_packet())
        } else {
            self.agents[i].queue.pop_front()
        };
        match next {
            Some(p) => self.start_head(i, p),
            None => {
                self.agents[i].backlogged = false;
                self.agents[i].absent_since_v = self.clock.reading();
                self.ledger.mark_absent(id, tick)?;
                self.push(tick, EventKind::BacklogEnd { agent: id });
                Ok(())
            }
        }
    }

    fn into_trace(self) -> Trace {
        Trace {
            metadata: TraceMetadata {
                seed: self.scenario.seed,
                scheduler: self.scenario.scheduler,
                alpha_policy: self.scenario.alpha_policy,
                duration: self.scenario.duration,
                end: self.now,
                scenario: self.scenario.clone(),
            },
            events: self.events,
            slots: self.slots,
        }
    }
}
