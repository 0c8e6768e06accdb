use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Backoff tag in idle slots, together with the exact floor argument it was
/// derived from. The compensation update reuses that argument so the tag and
/// the next compensation factor agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackoffTag {
    pub slots: u64,
    floor_arg: f64,
    alpha: f64,
}

impl BackoffTag {
    pub fn floor_arg(&self) -> f64 {
        self.floor_arg
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// A tag that did not come from a scaled length (BEB redraws).
    pub fn raw(slots: u64, alpha: f64) -> Self {
        BackoffTag {
            slots,
            floor_arg: slots as f64,
            alpha,
        }
    }
}

/// Rounds a floor argument that is an integer up to float noise onto that
/// integer, so `0.04 * 250.0` tags 10 slots rather than 9.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn check_inputs(len: u64, weight: f64, alpha: f64) -> Result<()> {
    if len == 0 {
        return Err(Error::param("length", "must be positive"));
    }
    if !(weight.is_finite() && weight > 0.0) {
        return Err(Error::param("weight", format!("must be positive, got {weight}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(())
}

/// `⌊alpha · (len/weight − epsilon)⌋`.
pub fn compute_backoff_dscfq(len: u64, weight: f64, alpha: f64, epsilon: f64) -> Result<BackoffTag> {
    check_inputs(len, weight, alpha)?;
    let floor_arg = snap(alpha * (len as f64 / weight - epsilon));
    if floor_arg < 0.0 {
        return Err(Error::NegativeBackoff { floor_arg });
    }
    Ok(BackoffTag {
        slots: floor_arg.floor() as u64,
        floor_arg,
        alpha,
    })
}

/// `⌊alpha · len/weight⌋`, the uncompensated tag used by both baselines.
pub fn compute_backoff_type_proportional(len: u64, weight: f64, alpha: f64) -> Result<BackoffTag> {
    check_inputs(len, weight, alpha)?;
    let floor_arg = snap(alpha * (len as f64 / weight));
    Ok(BackoffTag {
        slots: floor_arg.floor() as u64,
        floor_arg,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationState {
    pub epsilon: f64,
    /// Index of the packet the current epsilon applies to (1-based).
    pub packet_index: u64,
}

impl Default for CompensationState {
    fn default() -> Self {
        CompensationState {
            epsilon: 0.0,
            packet_index: 1,
        }
    }
}

/// `ε' = ε + (B/α − L/φ)` for a tag produced from this state.
///
/// Evaluated as `(B − γ)/α` with `γ` the tag's retained floor argument,
/// which is algebraically the same quantity and keeps `ε'` inside
/// `(−1/α, 0]` without rounding drift.
pub fn update_compensation(
    state: CompensationState,
    tag: &BackoffTag,
    alpha: f64,
    len: u64,
    weight: f64,
) -> CompensationState {
    debug_assert!({
        let direct = state.epsilon + (tag.slots as f64 / alpha - len as f64 / weight);
        let shared = (tag.slots as f64 - tag.floor_arg) / alpha;
        (direct - shared).abs() <= 1e-9 * (1.0 + direct.abs().max(len as f64 / weight))
    });
    CompensationState {
        epsilon: (tag.slots as f64 - tag.floor_arg) / alpha,
        packet_index: state.packet_index + 1,
    }
}
