use dscfq_core::analysis::{
    alpha_from_attempt_rate, derive_beta, expected_drift, optimal_attempt_rate, CrpCost,
    ModelShape, NbarFormula,
};
use dscfq_core::engine::{run_simulation, AlphaPolicy, EventKind, RunSummary, Scenario, Trace};
use dscfq_core::metrics::{jain_fairness_index, validate_trace, ViolationReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::experiments::sweep::{mean_packet_bytes, with_alpha};

pub const BLOCK_SLOTS: usize = 1000;

/// Controller parameters derived from a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSetup {
    pub crp_per_packet_us: f64,
    pub g_star: f64,
    pub alpha_star: f64,
    pub beta: f64,
    pub gamma: f64,
    pub policy: AlphaPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub alpha0: f64,
    pub gamma: Option<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub calibration_departures: u64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            alpha0: 0.2,
            gamma: None,
            alpha_min: 1e-4,
            alpha_max: 1.0,
            calibration_departures: 5000,
        }
    }
}

/// Measures the resolution cost at `alpha0`, finds the model optimum and
/// sizes the idle step so the drift vanishes there.
pub fn adaptive_setup(
    base: &Scenario,
    p: &AdaptiveParams,
    nbar: NbarFormula,
    g_hi: f64,
) -> Result<AdaptiveSetup> {
    let cal = with_alpha(base, p.alpha0, base.seed).with_departures(p.calibration_departures);
    let summary = RunSummary::from_trace(&run_simulation(&cal)?);
    let crp = CrpCost::calibrate(&summary)
        .ok_or_else(|| CliError::config("experiment.calibration_departures", "calibration run saw no collisions"))?;
    let CrpCost::PerPacket { seconds } = crp else {
        unreachable!("calibration yields a per-packet cost")
    };
    let shape = ModelShape::from_timing(&base.timing, mean_packet_bytes(base), crp).with_nbar(nbar);
    let g_star = optimal_attempt_rate(&shape, g_hi)?;
    let gamma = p.gamma.unwrap_or(1e-4 * p.alpha0);
    let beta = derive_beta(gamma, g_star)?;
    Ok(AdaptiveSetup {
        crp_per_packet_us: seconds * 1e6,
        g_star,
        alpha_star: alpha_from_attempt_rate(base, g_star)?,
        beta,
        gamma,
        policy: AlphaPolicy::Adaptive {
            alpha0: p.alpha0,
            gamma,
            beta,
            alpha_min: p.alpha_min,
            alpha_max: p.alpha_max,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveBlock {
    pub block: usize,
    pub start_slot: u64,
    pub tick_s: f64,
    pub alpha: f64,
    pub alpha_end: f64,
    pub expected_drift: f64,
    pub drift_matches: bool,
    /// Whole-run-so-far fairness at the block's end.
    pub fairness: Option<f64>,
    /// Payload-time fraction within the block.
    pub s_block: f64,
    /// Cumulative `W_k / phi_k / t` per agent at the block's end.
    pub normalized_throughput: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRun {
    pub seed: u64,
    pub summary: RunSummary,
    pub blocks: Vec<AdaptiveBlock>,
    /// Time-weighted mean α over the last quarter of simulated time.
    pub final_quarter_alpha: f64,
    pub final_fairness: f64,
    pub drift_match_fraction: f64,
    pub violations: ViolationReport,
}

pub fn adaptive_run(base: &Scenario, setup: &AdaptiveSetup, seed: u64) -> Result<AdaptiveRun> {
    let scenario = Scenario {
        alpha_policy: setup.policy,
        seed,
        ..base.clone()
    };
    let trace = run_simulation(&scenario)?;
    analyze_adaptive_trace(&trace, &scenario, setup, BLOCK_SLOTS)
}

/// Block-level view of an adaptive run. A block's drift matches when the
/// observed change of α has the sign of the expected drift at the block's
/// starting α, or when that α is within one block of steps of α*.
pub fn analyze_adaptive_trace(
    trace: &Trace,
    scenario: &Scenario,
    setup: &AdaptiveSetup,
    block_slots: usize,
) -> Result<AdaptiveRun> {
    let n = scenario.agents.len();
    let weights = scenario.weights();
    let rate = scenario.timing.data_rate as f64;
    let band = block_slots as f64 * setup.beta.max(setup.gamma);
    let end_s = trace.metadata.end.as_secs_f64();
    let quarter_start = 0.75 * end_s;

    let mut alpha = scenario.alpha_policy.initial_alpha();
    let mut bits = vec![0u64; n];
    let mut ev = trace.events.iter().peekable();
    let mut blocks = Vec::new();
    let (mut q_weighted, mut q_time) = (0.0, 0.0);
    let mut block_start: Option<(u64, f64, f64, u64)> = None;

    for slot in &trace.slots {
        let t0 = slot.start.as_secs_f64();
        if (slot.index as usize).is_multiple_of(block_slots) {
            block_start = Some((slot.index, t0, alpha, bits.iter().sum()));
        }
        let dur = slot.duration.as_secs_f64();
        if t0 >= quarter_start {
            q_weighted += alpha * dur;
            q_time += dur;
        }
        while let Some(e) = ev.next_if(|e| e.slot_index <= slot.index) {
            match e.kind {
                EventKind::Departure { agent, length_bits, .. } => bits[agent.index()] += length_bits,
                EventKind::AlphaUpdate { new, .. } => alpha = new,
                _ => {}
            }
        }
        if (slot.index as usize + 1).is_multiple_of(block_slots) {
            if let Some((start_slot, bt0, a0, bits0)) = block_start.take() {
                let t1 = t0 + dur;
                let d = expected_drift(a0, scenario, setup.beta, setup.gamma)?;
                let delta = alpha - a0;
                let drift_matches =
                    (a0 - setup.alpha_star).abs() <= band || (delta != 0.0 && delta.signum() == d.signum());
                let fairness = jain_fairness_index(
                    &bits.iter().map(|&b| b as f64).collect::<Vec<_>>(),
                    &weights,
                )
                .ok();
                let block_bits = bits.iter().sum::<u64>() - bits0;
                blocks.push(AdaptiveBlock {
                    block: blocks.len(),
                    start_slot,
                    tick_s: bt0,
                    alpha: a0,
                    alpha_end: alpha,
                    expected_drift: d,
                    drift_matches,
                    fairness,
                    s_block: block_bits as f64 / rate / (t1 - bt0),
                    normalized_throughput: bits
                        .iter()
                        .zip(&weights)
                        .map(|(&b, &w)| b as f64 / w / t1)
                        .collect(),
                });
            }
        }
    }
    let matched = blocks.iter().filter(|b| b.drift_matches).count();
    Ok(AdaptiveRun {
        seed: scenario.seed,
        summary: RunSummary::from_trace(trace),
        drift_match_fraction: if blocks.is_empty() {
            0.0
        } else {
            matched as f64 / blocks.len() as f64
        },
        blocks,
        final_quarter_alpha: if q_time > 0.0 { q_weighted / q_time } else { alpha },
        final_fairness: jain_fairness_index(&bits.iter().map(|&b| b as f64).collect::<Vec<_>>(), &weights)?,
        violations: validate_trace(trace, scenario)?,
    })
}
