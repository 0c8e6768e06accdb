use serde::{Deserialize, Serialize};

use crate::agent::{AgentSpec, LengthModel};
use crate::engine::timing::TimingParams;
use crate::error::{Error, Result};
use crate::sched::SchedulerKind;
use crate::time::Tick;

/// Scaling-factor policy for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaPolicy {
    Fixed {
        alpha: f64,
    },
    /// Per-slot update: success keeps α, collision adds `gamma`, idle
    /// subtracts `beta`; the result is clamped to `[alpha_min, alpha_max]`.
    Adaptive {
        alpha0: f64,
        gamma: f64,
        beta: f64,
        alpha_min: f64,
        alpha_max: f64,
    },
}

impl AlphaPolicy {
    pub fn initial_alpha(&self) -> f64 {
        match *self {
            AlphaPolicy::Fixed { alpha } => alpha,
            AlphaPolicy::Adaptive { alpha0, .. } => alpha0,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, AlphaPolicy::Adaptive { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            AlphaPolicy::Fixed { alpha } => pos("alpha", alpha),
            AlphaPolicy::Adaptive {
                alpha0,
                gamma,
                beta,
                alpha_min,
                alpha_max,
            } => {
                pos("alpha0", alpha0)?;
                pos("alpha_min", alpha_min)?;
                pos("alpha_max", alpha_max)?;
                if !(gamma >= 0.0 && beta >= 0.0) {
                    return Err(Error::param("gamma", "step sizes must be non-negative"));
                }
                if !(alpha_min <= alpha0 && alpha0 <= alpha_max) {
                    return Err(Error::param(
                        "alpha0",
                        format!("{alpha0} outside [{alpha_min}, {alpha_max}]"),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub timing: TimingParams,
    pub scheduler: SchedulerKind,
    pub alpha_policy: AlphaPolicy,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_cw_min")]
    pub cw_min: u64,
    #[serde(default = "default_cw_max")]
    pub cw_max: u64,
    /// Simulated horizon; slots starting before it run to completion.
    pub duration: Tick,
    /// Optional early stop once this many packets have departed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_departures: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

pub fn default_m() -> u32 {
    2
}

pub fn default_cw_min() -> u64 {
    15
}

pub fn default_cw_max() -> u64 {
    1023
}

/// Mean message length of the evaluation setup, in bytes.
pub const MEAN_MESSAGE_BYTES: u64 = 2016;

/// Weights of the ten-agent evaluation network.
pub const DEFAULT_WEIGHTS: [f64; 10] = [10.0, 10.0, 10.0, 8.0, 8.0, 8.0, 2.0, 2.0, 1.0, 1.0];

impl Scenario {
    /// The ten-agent saturated evaluation network: weights 10,10,10,8,8,8,
    /// 2,2,1,1 and message lengths uniform on [1008, 3024] bytes (mean 2016).
    pub fn default_network(scheduler: SchedulerKind, alpha: f64, seed: u64) -> Self {
        let agents = DEFAULT_WEIGHTS
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                AgentSpec::saturated(
                    i as u32,
                    w,
                    LengthModel::Uniform {
                        lo: MEAN_MESSAGE_BYTES / 2,
                        hi: MEAN_MESSAGE_BYTES * 3 / 2,
                    },
                )
            })
            .collect();
        Scenario {
            agents,
            timing: TimingParams::default(),
            scheduler,
            alpha_policy: AlphaPolicy::Fixed { alpha },
            m: default_m(),
            cw_min: default_cw_min(),
            cw_max: default_cw_max(),
            duration: Tick::from_millis(60_000),
            max_departures: Some(20_000),
            seed,
        }
    }

    pub fn with_departures(mut self, n: u64) -> Self {
        self.max_departures = Some(n);
        self
    }

    pub fn weights(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.weight).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidScenario("at least one agent is required".into()));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.id.index() != i {
                return Err(Error::InvalidScenario(format!(
                    "agent ids must be 0..N in order; position {i} has id {}",
                    a.id
                )));
            }
            a.validate()?;
        }
        self.timing.validate()?;
        self.alpha_policy.validate()?;
        if self.m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if self.m == 1 && self.scheduler.uses_splitting() && self.agents.len() > 1 {
            return Err(Error::param(
                "m",
                "m = 1 cannot split contenders with equal collision counters",
            ));
        }
        if self.cw_min > self.cw_max {
            return Err(Error::param("cw_min", "exceeds cw_max"));
        }
        Ok(())
    }
}
