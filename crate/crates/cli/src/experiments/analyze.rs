use dscfq_core::analysis::{
    alpha_from_attempt_rate, attempt_rate_from_alpha, derive_beta, expected_drift,
    optimal_attempt_rate, slot_probabilities, CrpCost, ModelShape, NbarFormula,
};
use dscfq_core::engine::{run_simulation, RunSummary, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::experiments::sweep::{mean_packet_bytes, with_alpha};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GRow {
    pub g: f64,
    pub p_idle: f64,
    pub p_succ: f64,
    pub p_coll: f64,
    pub n_bar: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub g: f64,
    pub s: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResult {
    pub g_curve: Vec<GRow>,
    pub alpha_curve: Vec<AlphaRow>,
    pub g_star: f64,
    pub alpha_star: f64,
    pub beta: f64,
    pub gamma: f64,
    pub crp_per_packet_us: f64,
    pub nbar_formula: NbarFormula,
}

/// Per-packet resolution cost measured by a fixed-α run.
pub fn calibrate_crp(base: &Scenario, alpha: f64, departures: u64) -> Result<f64> {
    let s = with_alpha(base, alpha, base.seed).with_departures(departures);
    match CrpCost::calibrate(&RunSummary::from_trace(&run_simulation(&s)?)) {
        Some(CrpCost::PerPacket { seconds }) => Ok(seconds),
        _ => Err(CliError::config("experiment.crp_per_packet_us", "calibration run saw no collisions")),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn analyze(
    base: &Scenario,
    g_max: f64,
    points: usize,
    alphas: &[f64],
    crp_per_packet_s: f64,
    nbar: NbarFormula,
    g_hi: f64,
    gamma: f64,
) -> Result<AnalyzeResult> {
    let shape = ModelShape::from_timing(
        &base.timing,
        mean_packet_bytes(base),
        CrpCost::PerPacket {
            seconds: crp_per_packet_s,
        },
    )
    .with_nbar(nbar);
    let g_curve = (0..points)
        .map(|i| {
            let g = g_max * i as f64 / (points - 1) as f64;
            let p = slot_probabilities(g)?;
            Ok(GRow {
                g,
                p_idle: p.p_idle,
                p_succ: p.p_succ,
                p_coll: p.p_coll,
                n_bar: shape.n_bar(g)?,
                s: shape.throughput(g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let g_star = optimal_attempt_rate(&shape, g_hi)?;
    let beta = derive_beta(gamma, g_star)?;
    let alpha_curve = alphas
        .iter()
        .map(|&alpha| {
            let g = attempt_rate_from_alpha(base, alpha)?;
            Ok(AlphaRow {
                alpha,
                g,
                s: shape.throughput(g)?,
                d: expected_drift(alpha, base, beta, gamma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyzeResult {
        g_curve,
        alpha_curve,
        g_star,
        alpha_star: alpha_from_attempt_rate(base, g_star)?,
        beta,
        gamma,
        crp_per_packet_us: crp_per_packet_s * 1e6,
        nbar_formula: nbar,
    })
}
