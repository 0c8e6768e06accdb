//! Saturation throughput under the Poisson attempt model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{frame_exchange_duration, RunSummary, TimingParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotProbabilities {
    pub p_idle: f64,
    pub p_succ: f64,
    /// Defined as the complement, so the three always sum to one.
    pub p_coll: f64,
}

pub fn slot_probabilities(g: f64) -> Result<SlotProbabilities> {
    check_rate(g)?;
    let p_idle = (-g).exp();
    let p_succ = g * p_idle;
    Ok(SlotProbabilities {
        p_idle,
        p_succ,
        p_coll: (1.0 - p_idle - p_succ).max(0.0),
    })
}

fn check_rate(g: f64) -> Result<()> {
    if g.is_finite() && g >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("G", format!("must be finite and non-negative, got {g}")))
    }
}

/// `P(n >= 2)` for `n ~ Poisson(g)`, without the cancellation of
/// `1 - e^-g - g e^-g` at small `g`.
fn p_at_least_two(g: f64) -> f64 {
    if g < 0.1 {
        // e^-g * sum_{n>=2} g^n / n!
        let mut term = g * g / 2.0;
        let mut sum = 0.0;
        let mut n = 2.0;
        while term > sum * 1e-18 && n < 40.0 {
            sum += term;
            n += 1.0;
            term *= g / n;
        }
        sum * (-g).exp()
    } else {
        -(-g).exp_m1() - g * (-g).exp()
    }
}

/// Which expression stands in for the mean collision multiplicity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbarFormula {
    /// `E[n | n >= 2] = G(1 - e^-G) / P_coll`.
    #[default]
    Exact,
    /// `G(1 - e^-G)` as printed, without the conditioning denominator.
    Paper,
}

impl NbarFormula {
    pub fn as_str(self) -> &'static str {
        match self {
            NbarFormula::Exact => "exact",
            NbarFormula::Paper => "paper",
        }
    }
}

impl fmt::Display for NbarFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NbarFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NbarFormula::Exact),
            "paper" => Ok(NbarFormula::Paper),
            other => Err(Error::param("nbar_formula", format!("expected exact|paper, got {other:?}"))),
        }
    }
}

/// Mean number of agents in a collision, `E[n | n >= 2]` for Poisson(g).
pub fn mean_collision_size(g: f64) -> Result<f64> {
    check_rate(g)?;
    if g == 0.0 {
        return Err(Error::param("G", "collision size is undefined at G = 0"));
    }
    if g < 1e-6 {
        // 2 + g/3 + O(g^2)
        return Ok(2.0 + g / 3.0);
    }
    Ok(g * -(-g).exp_m1() / p_at_least_two(g))
}

pub fn mean_collision_size_with(g: f64, formula: NbarFormula) -> Result<f64> {
    match formula {
        NbarFormula::Exact => mean_collision_size(g),
        NbarFormula::Paper => {
            check_rate(g)?;
            Ok(g * -(-g).exp_m1())
        }
    }
}

/// Fully specified operating point. Durations in seconds, lengths in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputModel {
    pub g: f64,
    pub mean_len_bits: f64,
    pub data_rate: f64,
    pub t_succ: f64,
    pub t_coll: f64,
    pub sigma: f64,
    pub n_bar_c: f64,
}

impl ThroughputModel {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.g)?;
        for (name, v) in [
            ("mean_len_bits", self.mean_len_bits),
            ("data_rate", self.data_rate),
            ("t_succ", self.t_succ),
            ("t_coll", self.t_coll),
            ("sigma", self.sigma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Fraction of medium time carrying successful payload.
pub fn saturation_throughput(model: &ThroughputModel) -> Result<f64> {
    model.validate()?;
    let p = slot_probabilities(model.g)?;
    let num = (p.p_succ + model.n_bar_c * p.p_coll) * model.mean_len_bits / model.data_rate;
    let den = p.p_succ * model.t_succ + p.p_idle * model.sigma + p.p_coll * model.t_coll;
    if den <= 0.0 {
        return Err(Error::ZeroThroughput);
    }
    Ok(num / den)
}

/// Cost of the collision resolution period inside `T_coll`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrpCost {
    /// A constant `T_CRP`, in seconds.
    Fixed { seconds: f64 },
    /// `T_CRP = n_c * seconds`: each collided packet costs a fixed time to
    /// resolve and deliver.
    PerPacket { seconds: f64 },
}

impl CrpCost {
    /// Per-packet cost measured by a run: mean resolution time per collision
    /// over mean collision size. `None` if the run saw no collisions.
    pub fn calibrate(summary: &RunSummary) -> Option<CrpCost> {
        (summary.slots.collision > 0 && summary.mean_collision_size > 0.0).then(|| CrpCost::PerPacket {
            seconds: summary.mean_crp_duration_us * 1e-6 / summary.mean_collision_size,
        })
    }
}

/// Everything in a [`ThroughputModel`] except the attempt rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub mean_len_bits: f64,
    pub data_rate: f64,
    /// `T_s` plus the post-busy gap.
    pub t_succ: f64,
    /// Wasted collided RTS: RTS airtime plus CTS timeout.
    pub t_c: f64,
    /// Idle gap closing a busy generalized slot.
    pub gap: f64,
    pub sigma: f64,
    pub crp: CrpCost,
    pub nbar: NbarFormula,
}

impl ModelShape {
    pub fn from_timing(timing: &TimingParams, mean_len_bytes: f64, crp: CrpCost) -> Self {
        let bits = mean_len_bytes * 8.0;
        let gap = timing.post_busy_gap().as_secs_f64();
        ModelShape {
            mean_len_bits: bits,
            data_rate: timing.data_rate as f64,
            t_succ: frame_exchange_duration(bits.round() as u64, timing).as_secs_f64() + gap,
            t_c: timing.collided_rts_waste().as_secs_f64(),
            gap,
            sigma: timing.sigma.as_secs_f64(),
            crp,
            nbar: NbarFormula::Exact,
        }
    }

    pub fn with_nbar(mut self, nbar: NbarFormula) -> Self {
        self.nbar = nbar;
        self
    }

    pub fn n_bar(&self, g: f64) -> Result<f64> {
        if g == 0.0 {
            return Ok(2.0);
        }
        mean_collision_size_with(g, self.nbar)
    }

    pub fn t_coll(&self, g: f64) -> Result<f64> {
        let crp = match self.crp {
            CrpCost::Fixed { seconds } => seconds,
            CrpCost::PerPacket { seconds } => self.n_bar(g)? * seconds,
        };
        Ok(self.t_c + crp + self.gap)
    }

    pub fn model(&self, g: f64) -> Result<ThroughputModel> {
        Ok(ThroughputModel {
            g,
            mean_len_bits: self.mean_len_bits,
            data_rate: self.data_rate,
            t_succ: self.t_succ,
            t_coll: self.t_coll(g)?,
            sigma: self.sigma,
            n_bar_c: self.n_bar(g)?,
        })
    }

    pub fn throughput(&self, g: f64) -> Result<f64> {
        saturation_throughput(&self.model(g)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn probabilities_at_zero_and_one() {
        let p = slot_probabilities(0.0).unwrap();
        assert_eq!((p.p_idle, p.p_succ, p.p_coll), (1.0, 0.0, 0.0));
        let p = slot_probabilities(1.0).unwrap();
        close(p.p_idle, 0.36788, 1e-5);
        close(p.p_succ, 0.36788, 1e-5);
        close(p.p_coll, 0.26424, 1e-5);
        assert!(slot_probabilities(-0.1).is_err());
    }

    #[test]
    fn collision_size_examples() {
        close(mean_collision_size(1.0).unwrap(), 2.3922, 1e-4);
        // 3(1 - e^-3) = 2.850639, 1 - 4e^-3 = 0.800852
        close(mean_collision_size(3.0).unwrap(), 3.559509, 1e-5);
        close(mean_collision_size(1e-9).unwrap(), 2.0, 1e-8);
        close(mean_collision_size(1e-3).unwrap(), 2.0 + 1e-3 / 3.0, 1e-6);
        assert!(mean_collision_size(0.0).is_err());
    }

    #[test]
    fn small_g_branch_is_continuous() {
        let a = mean_collision_size(0.0999999).unwrap();
        let b = mean_collision_size(0.1000001).unwrap();
        close(a, b, 1e-6);
    }

    #[test]
    fn paper_formula_is_exact_times_p_coll() {
        for g in [0.3, 1.0, 2.5] {
            let p = slot_probabilities(g).unwrap();
            let exact = mean_collision_size(g).unwrap();
            let paper = mean_collision_size_with(g, NbarFormula::Paper).unwrap();
            close(paper, exact * p.p_coll, 1e-12);
        }
    }

    #[test]
    fn throughput_numerator_is_g_times_payload_time() {
        let m = ThroughputModel {
            g: 1.0,
            mean_len_bits: 16128.0,
            data_rate: 12e6,
            t_succ: 1447e-6,
            t_coll: 3000e-6,
            sigma: 9e-6,
            n_bar_c: mean_collision_size(1.0).unwrap(),
        };
        let s = saturation_throughput(&m).unwrap();
        let den = 0.36788 * 1447e-6 + 0.36788 * 9e-6 + 0.26424 * 3000e-6;
        close(s, 1344e-6 / den, 1e-4);
        let zero = ThroughputModel { g: 0.0, ..m };
        assert_eq!(saturation_throughput(&zero).unwrap(), 0.0);
    }

    #[test]
    fn huge_collision_cost_kills_throughput() {
        let m = ThroughputModel {
            g: 1.0,
            mean_len_bits: 16128.0,
            data_rate: 12e6,
            t_succ: 1447e-6,
            t_coll: 1e6,
            sigma: 9e-6,
            n_bar_c: 2.39,
        };
        assert!(saturation_throughput(&m).unwrap() < 1e-8);
    }
}
