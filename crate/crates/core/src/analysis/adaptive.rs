//! The scaling-factor controller and its drift.

use serde::{Deserialize, Serialize};

use crate::accounting::SlotKind;
use crate::analysis::throughput::slot_probabilities;
use crate::engine::{AlphaPolicy, Scenario};
use crate::error::{Error, Result};

/// Per-slot stochastic update of α: success keeps it, collision adds
/// `gamma`, idle subtracts `beta`, then the result is clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveAlphaController {
    alpha: f64,
    beta: f64,
    gamma: f64,
    alpha_min: f64,
    alpha_max: f64,
}

impl AdaptiveAlphaController {
    pub fn new(alpha0: f64, beta: f64, gamma: f64, alpha_min: f64, alpha_max: f64) -> Result<Self> {
        if !(alpha_min > 0.0 && alpha_min <= alpha_max) {
            return Err(Error::param("alpha_min", format!("need 0 < {alpha_min} <= {alpha_max}")));
        }
        if !(beta >= 0.0 && gamma >= 0.0) {
            return Err(Error::param("beta", "step sizes must be non-negative"));
        }
        Ok(AdaptiveAlphaController {
            alpha: alpha0.clamp(alpha_min, alpha_max),
            beta,
            gamma,
            alpha_min,
            alpha_max,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn update(&mut self, kind: SlotKind) {
        *self = self.alpha_update(kind);
    }

    pub fn alpha_update(self, kind: SlotKind) -> Self {
        let next = match kind {
            SlotKind::Success => self.alpha,
            SlotKind::Collision => self.alpha + self.gamma,
            SlotKind::Idle => self.alpha - self.beta,
        };
        AdaptiveAlphaController {
            alpha: next.clamp(self.alpha_min, self.alpha_max),
            ..self
        }
    }
}

/// Idle-step size balancing the collision step at the target rate:
/// `beta * p_idle(G*) = gamma * p_coll(G*)`.
pub fn derive_beta(gamma: f64, g_star: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::param("gamma", "must be non-negative"));
    }
    if g_star.is_nan() || g_star <= 0.0 {
        return Err(Error::param("G*", "must be positive"));
    }
    let p = slot_probabilities(g_star)?;
    Ok(gamma * p.p_coll / p.p_idle)
}

/// `sum_k phi_k / L_k`, with mean lengths in bytes. Attempt rate is this
/// divided by α.
pub fn weight_length_ratio(scenario: &Scenario) -> f64 {
    scenario
        .agents
        .iter()
        .map(|a| a.weight / a.packet_length.mean_bytes())
        .sum()
}

/// Attempts per generalized slot at scaling factor `alpha`: each agent tries
/// about once every `alpha * L_k / phi_k` slots.
pub fn attempt_rate_from_alpha(scenario: &Scenario, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(weight_length_ratio(scenario) / alpha)
}

/// Inverse of [`attempt_rate_from_alpha`].
pub fn alpha_from_attempt_rate(scenario: &Scenario, g: f64) -> Result<f64> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::param("G", format!("must be positive, got {g}")));
    }
    Ok(weight_length_ratio(scenario) / g)
}

/// Expected one-slot change of α at `alpha`.
pub fn expected_drift(alpha: f64, scenario: &Scenario, beta: f64, gamma: f64) -> Result<f64> {
    let p = slot_probabilities(attempt_rate_from_alpha(scenario, alpha)?)?;
    Ok(gamma * p.p_coll - beta * p.p_idle)
}

/// Adaptive policy aimed at attempt rate `g_star`.
pub fn adaptive_policy(
    alpha0: f64,
    gamma: f64,
    g_star: f64,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<AlphaPolicy> {
    Ok(AlphaPolicy::Adaptive {
        alpha0,
        gamma,
        beta: derive_beta(gamma, g_star)?,
        alpha_min,
        alpha_max,
    })
}
