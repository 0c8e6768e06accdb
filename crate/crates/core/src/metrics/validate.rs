//! Replays a trace through the service ledger and checks the deviation
//! bounds DSCFQ guarantees.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::accounting::{NetworkVirtualClock, ServiceLedger, SlotKind, VirtualTime};
use crate::agent::AgentId;
use crate::engine::{EventKind, Scenario, Trace};
use crate::error::{Error, Result};
use crate::sched::SchedulerKind;
use crate::time::Tick;

/// Absolute tolerance in service units.
pub const TOLERANCE: f64 = 1e-9;

/// Violation records kept verbatim; later ones are only counted.
const MAX_RECORDED: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckKind {
    /// Deviation at a departure lies in `(-1/alpha, 0]`.
    Lemma1,
    /// Deviation while backlogged lies in `[-1/alpha, L_max/phi]`.
    Lemma2,
    /// Pairwise normalized-service gap within the pairwise bound.
    Theorem1,
    /// The compensation factor of packet `i` equals the deviation at the
    /// departure of packet `i - 1`.
    EpsilonIdentity,
    /// The recorded `v` matches the replayed virtual clock.
    VirtualTime,
    /// The recorded departure deviation matches the replayed ledger.
    DeltaSnapshot,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tick: Tick,
    pub agents: Vec<u32>,
    pub check: CheckKind,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub scheduler: SchedulerKind,
    /// False for baselines: their violations are informative only.
    pub enforced: bool,
    pub departures_checked: u64,
    pub violation_counts: BTreeMap<CheckKind, u64>,
    pub violations: Vec<Violation>,
    /// Largest observed pairwise gap over its bound.
    pub max_theorem1_ratio: f64,
    pub max_theorem1_pair: Option<(u32, u32)>,
    /// Extremes of the deviation at departures, in units of `1/alpha`.
    pub min_departure_delta_alpha: f64,
    pub max_departure_delta_alpha: f64,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violation_counts.is_empty()
    }

    pub fn count(&self, check: CheckKind) -> u64 {
        self.violation_counts.get(&check).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.violation_counts.values().sum()
    }

    fn push(&mut self, v: Violation) {
        *self.violation_counts.entry(v.check).or_default() += 1;
        if self.violations.len() < MAX_RECORDED {
            self.violations.push(v);
        }
    }
}

/// Running extremes of `w_k - w_j` since both agents became co-backlogged.
#[derive(Debug, Clone, Copy)]
struct PairWindow {
    lo: f64,
    hi: f64,
}

/// Replays `trace` and checks, at tolerance [`TOLERANCE`]:
///
/// * every departure deviation against `(-1/alpha, 0]` (DSCFQ only);
/// * every backlogged deviation at every event against `[-1/alpha, L_max/phi]`;
/// * the pairwise gap over every co-backlogged interval against
///   `L_k/phi_k + L_j/phi_j + 2/alpha` (exact: the worst interval inside a
///   co-backlogged stretch is the spread of `w_k - w_j` over it);
/// * compensation factors against the previous departure deviation (DSCFQ).
///
/// Departure checks use the α in force at the event. Bounds that span time
/// use the smallest α seen so far, which is the loosest α the trace has
/// exposed agents to.
pub fn validate_trace(trace: &Trace, scenario: &Scenario) -> Result<ViolationReport> {
    let n = scenario.agents.len();
    let weights = scenario.weights();
    let l_max: Vec<f64> = scenario
        .agents
        .iter()
        .map(|a| a.packet_length.max_bytes() as f64)
        .collect();
    let kind = trace.metadata.scheduler;
    let dscfq = kind == SchedulerKind::Dscfq;

    let mut clock = NetworkVirtualClock::new(trace.metadata.alpha_policy.initial_alpha())?;
    let mut ledger = ServiceLedger::new(&weights)?;
    let mut absent_since = vec![VirtualTime::ZERO; n];
    let mut last_delta: Vec<f64> = vec![0.0; n];
    let mut pairs: Vec<Option<PairWindow>> = vec![None; n * n];
    let mut alpha_min = clock.alpha();

    let mut report = ViolationReport {
        scheduler: kind,
        enforced: dscfq,
        departures_checked: 0,
        violation_counts: BTreeMap::new(),
        violations: Vec::new(),
        max_theorem1_ratio: 0.0,
        max_theorem1_pair: None,
        min_departure_delta_alpha: 0.0,
        max_departure_delta_alpha: f64::NEG_INFINITY,
    };
    let check_agent = |a: AgentId| {
        if a.index() < n {
            Ok(a)
        } else {
            Err(Error::UnknownAgent(a))
        }
    };

    for e in &trace.events {
        let v = clock.value();
        if (e.v - v).abs() > TOLERANCE * v.abs().max(1.0) {
            report.push(Violation {
                tick: e.tick,
                agents: Vec::new(),
                check: CheckKind::VirtualTime,
                observed: e.v,
                bound: v,
            });
        }
        let alpha = clock.alpha();
        match e.kind {
            EventKind::SlotStart { kind: SlotKind::Idle } => {
                clock.record(SlotKind::Idle);
                lemma2_sweep(&clock, &ledger, &l_max, alpha_min, e.tick, &mut report)?;
            }
            EventKind::SlotStart { .. } | EventKind::TxStart { .. } | EventKind::TxEnd { .. } => {}
            EventKind::CrpPulse { .. } => {}
            EventKind::AlphaUpdate { new, .. } => {
                clock.set_alpha(new)?;
                alpha_min = alpha_min.min(new);
            }
            EventKind::BacklogStart { agent } => {
                let a = check_agent(agent)?;
                let i = a.index();
                if !ledger.account(a)?.is_backlogged() {
                    ledger.sync_absent_between(a, absent_since[i], clock.reading())?;
                    ledger.mark_backlogged(a, e.tick)?;
                    let wi = ledger.account(a)?.normalized_service();
                    for j in 0..n {
                        let aj = AgentId(j as u32);
                        if j != i && ledger.account(aj)?.is_backlogged() {
                            let f = wi - ledger.account(aj)?.normalized_service();
                            pairs[i * n + j] = Some(PairWindow { lo: f, hi: f });
                            pairs[j * n + i] = Some(PairWindow { lo: -f, hi: -f });
                        }
                    }
                }
            }
            EventKind::BacklogEnd { agent } => {
                let a = check_agent(agent)?;
                let i = a.index();
                ledger.mark_absent(a, e.tick)?;
                absent_since[i] = clock.reading();
                for j in 0..n {
                    pairs[i * n + j] = None;
                    pairs[j * n + i] = None;
                }
            }
            EventKind::Departure {
                agent,
                length_bits,
                delta,
                epsilon,
                ..
            } => {
                let a = check_agent(agent)?;
                let k = a.index();
                ledger.record_service(a, length_bits / 8)?;
                let d = ledger.service_deviation(&clock, a)?;
                report.departures_checked += 1;
                if (d - delta).abs() > TOLERANCE {
                    report.push(Violation {
                        tick: e.tick,
                        agents: vec![agent.0],
                        check: CheckKind::DeltaSnapshot,
                        observed: delta,
                        bound: d,
                    });
                }
                if dscfq {
                    // Checked on the recorded snapshot; disagreement with the
                    // replay is reported separately above.
                    let lo = -1.0 / alpha;
                    report.min_departure_delta_alpha = report.min_departure_delta_alpha.min(delta * alpha);
                    report.max_departure_delta_alpha = report.max_departure_delta_alpha.max(delta * alpha);
                    if !(delta > lo - TOLERANCE && delta <= TOLERANCE) {
                        report.push(Violation {
                            tick: e.tick,
                            agents: vec![agent.0],
                            check: CheckKind::Lemma1,
                            observed: delta,
                            bound: if delta > 0.0 { 0.0 } else { lo },
                        });
                    }
                    if let Some(eps) = epsilon {
                        if (eps - last_delta[k]).abs() > TOLERANCE {
                            report.push(Violation {
                                tick: e.tick,
                                agents: vec![agent.0],
                                check: CheckKind::EpsilonIdentity,
                                observed: eps,
                                bound: last_delta[k],
                            });
                        }
                    }
                }
                last_delta[k] = d;
                lemma2_one(a, d, &l_max, alpha_min, e.tick, &ledger, &mut report)?;

                let wk = ledger.account(a)?.normalized_service();
                for j in 0..n {
                    let Some(win) = pairs[k * n + j].as_mut() else {
                        continue;
                    };
                    let aj = AgentId(j as u32);
                    let f = wk - ledger.account(aj)?.normalized_service();
                    win.lo = win.lo.min(f);
                    win.hi = win.hi.max(f);
                    let (lo, hi) = (win.lo, win.hi);
                    pairs[j * n + k] = Some(PairWindow { lo: -hi, hi: -lo });
                    let spread = hi - lo;
                    let bound = l_max[k] / weights[k] + l_max[j] / weights[j] + 2.0 / alpha_min;
                    let ratio = spread / bound;
                    if ratio > report.max_theorem1_ratio {
                        report.max_theorem1_ratio = ratio;
                        report.max_theorem1_pair = Some((k.min(j) as u32, k.max(j) as u32));
                    }
                    if spread > bound + TOLERANCE {
                        report.push(Violation {
                            tick: e.tick,
                            agents: vec![agent.0, j as u32],
                            check: CheckKind::Theorem1,
                            observed: spread,
                            bound,
                        });
                    }
                }
            }
        }
    }
    if report.max_departure_delta_alpha == f64::NEG_INFINITY {
        report.max_departure_delta_alpha = 0.0;
    }
    Ok(report)
}

fn lemma2_one(
    a: AgentId,
    d: f64,
    l_max: &[f64],
    alpha_min: f64,
    tick: Tick,
    ledger: &ServiceLedger,
    report: &mut ViolationReport,
) -> Result<()> {
    let acc = ledger.account(a)?;
    if !acc.is_backlogged() {
        return Ok(());
    }
    let lo = -1.0 / alpha_min;
    let hi = l_max[a.index()] / acc.weight();
    if d < lo - TOLERANCE || d > hi + TOLERANCE {
        report.push(Violation {
            tick,
            agents: vec![a.0],
            check: CheckKind::Lemma2,
            observed: d,
            bound: if d > hi { hi } else { lo },
        });
    }
    Ok(())
}

/// Deviations only grow between departures, and only on idle slots, so the
/// upper bound needs checking right after each idle slot and the lower bound
/// right after each departure.
fn lemma2_sweep(
    clock: &NetworkVirtualClock,
    ledger: &ServiceLedger,
    l_max: &[f64],
    alpha_min: f64,
    tick: Tick,
    report: &mut ViolationReport,
) -> Result<()> {
    for i in 0..ledger.len() {
        let a = AgentId(i as u32);
        if ledger.account(a)?.is_backlogged() {
            let d = ledger.service_deviation(clock, a)?;
            lemma2_one(a, d, l_max, alpha_min, tick, ledger, report)?;
        }
    }
    Ok(())
}
