use dscfq_core::analysis::{
    attempt_rate_from_alpha, alpha_from_attempt_rate, optimal_attempt_rate, CrpCost, ModelShape,
    NbarFormula,
};
use dscfq_core::batch::run_many_with;
use dscfq_core::engine::{AlphaPolicy, RunSummary, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub g: f64,
    /// Mean over seeds.
    pub s_emp: f64,
    pub s_emp_runs: Vec<f64>,
    pub s_model: f64,
    pub crp_per_packet_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Grid point with the largest mean empirical throughput.
    pub alpha_hat: f64,
    pub s_max: f64,
    /// Model optimum using the resolution cost pooled over the grid.
    pub g_star: f64,
    pub alpha_star: f64,
    pub crp_per_packet_us: f64,
}

/// Mean delivered packet length in bytes: agents send packets at rates
/// proportional to `phi_k / L_k`.
pub fn mean_packet_bytes(s: &Scenario) -> f64 {
    let w: f64 = s.agents.iter().map(|a| a.weight).sum();
    let r: f64 = s
        .agents
        .iter()
        .map(|a| a.weight / a.packet_length.mean_bytes())
        .sum();
    w / r
}

pub fn with_alpha(base: &Scenario, alpha: f64, seed: u64) -> Scenario {
    Scenario {
        alpha_policy: AlphaPolicy::Fixed { alpha },
        seed,
        ..base.clone()
    }
}

/// Pooled per-packet resolution cost in seconds over several runs.
pub fn pooled_crp_cost(summaries: &[&RunSummary]) -> Option<f64> {
    let (mut time_us, mut packets) = (0.0, 0.0);
    for s in summaries {
        let c = s.slots.collision as f64;
        time_us += s.mean_crp_duration_us * c;
        packets += s.mean_collision_size * c;
    }
    (packets > 0.0).then(|| time_us * 1e-6 / packets)
}

/// Empirical and modeled throughput at each grid α. The model's resolution
/// cost at each α is calibrated from the runs at that α.
pub fn sweep_alpha(
    base: &Scenario,
    grid: &[f64],
    seeds: &[u64],
    nbar: NbarFormula,
    g_hi: f64,
) -> Result<SweepResult> {
    let scenarios: Vec<Scenario> = grid
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| with_alpha(base, a, s)))
        .collect();
    let summaries = run_many_with(&scenarios, |_, t| Ok(RunSummary::from_trace(&t)))?;
    let all: Vec<&RunSummary> = summaries.iter().collect();
    let pooled = pooled_crp_cost(&all).unwrap_or(0.0);
    let mean_bytes = mean_packet_bytes(base);

    let mut points = Vec::with_capacity(grid.len());
    for (i, &alpha) in grid.iter().enumerate() {
        let runs = &summaries[i * seeds.len()..(i + 1) * seeds.len()];
        let refs: Vec<&RunSummary> = runs.iter().collect();
        let per_packet = pooled_crp_cost(&refs).unwrap_or(pooled);
        let shape = ModelShape::from_timing(&base.timing, mean_bytes, CrpCost::PerPacket { seconds: per_packet })
            .with_nbar(nbar);
        let g = attempt_rate_from_alpha(base, alpha)?;
        let s_emp_runs: Vec<f64> = runs.iter().map(|r| r.s_emp).collect();
        points.push(SweepPoint {
            alpha,
            g,
            s_emp: s_emp_runs.iter().sum::<f64>() / s_emp_runs.len() as f64,
            s_emp_runs,
            s_model: shape.throughput(g)?,
            crp_per_packet_us: per_packet * 1e6,
        });
    }
    let best = points
        .iter()
        .max_by(|a, b| a.s_emp.total_cmp(&b.s_emp))
        .expect("non-empty grid");
    let shape = ModelShape::from_timing(&base.timing, mean_bytes, CrpCost::PerPacket { seconds: pooled })
        .with_nbar(nbar);
    let g_star = optimal_attempt_rate(&shape, g_hi)?;
    Ok(SweepResult {
        alpha_hat: best.alpha,
        s_max: best.s_emp,
        g_star,
        alpha_star: alpha_from_attempt_rate(base, g_star)?,
        crp_per_packet_us: pooled * 1e6,
        points,
    })
}
