use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Packet length distribution, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthModel {
    Fixed { bytes: u64 },
    /// Uniform over the closed range `[lo, hi]`.
    Uniform { lo: u64, hi: u64 },
    /// Exponential with the given mean conditioned on `X <= max`, rounded
    /// up to whole bytes.
    TruncatedExponential { mean: f64, max: u64 },
}

impl LengthModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthModel::Fixed { bytes } if bytes < 1 => {
                Err(Error::param("packet_length.bytes", "must be at least 1 byte"))
            }
            LengthModel::Uniform { lo, hi } if lo < 1 || hi < lo => Err(Error::param(
                "packet_length",
                format!("uniform bounds [{lo}, {hi}] must satisfy 1 <= lo <= hi"),
            )),
            LengthModel::TruncatedExponential { mean, max }
                if !(mean.is_finite() && mean > 0.0) || max < 1 =>
            {
                Err(Error::param(
                    "packet_length",
                    format!("truncated exponential needs mean > 0 and max >= 1 (mean={mean}, max={max})"),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            LengthModel::Fixed { bytes } => bytes,
            LengthModel::Uniform { lo, hi } => rng.random_range(lo..=hi),
            LengthModel::TruncatedExponential { mean, max } => {
                let exp = Exp::new(1.0 / mean).expect("validated mean");
                loop {
                    let x: f64 = exp.sample(rng);
                    if x <= max as f64 {
                        return (x.ceil() as u64).clamp(1, max);
                    }
                }
            }
        }
    }

    pub fn max_bytes(&self) -> u64 {
        match *self {
            LengthModel::Fixed { bytes } => bytes,
            LengthModel::Uniform { hi, .. } => hi,
            LengthModel::TruncatedExponential { max, .. } => max,
        }
    }

    pub fn mean_bytes(&self) -> f64 {
        match *self {
            LengthModel::Fixed { bytes } => bytes as f64,
            LengthModel::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
            LengthModel::TruncatedExponential { mean, max } => {
                // P(L = n) = P(n-1 < X <= n | X <= max)
                let rate = 1.0 / mean;
                let norm = 1.0 - (-rate * max as f64).exp();
                (1..=max)
                    .map(|n| {
                        let p = (-rate * (n - 1) as f64).exp() - (-rate * n as f64).exp();
                        n as f64 * p
                    })
                    .sum::<f64>()
                    / norm
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: AgentId,
    pub weight: f64,
    pub packet_length: LengthModel,
    #[serde(default = "default_true")]
    pub always_backlogged: bool,
    /// Poisson packet arrival rate in packets per second; only used when
    /// the agent is not always backlogged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rate: Option<f64>,
}

fn default_true() -> bool {
    true
}

impl AgentSpec {
    pub fn saturated(id: u32, weight: f64, packet_length: LengthModel) -> Self {
        AgentSpec {
            id: AgentId(id),
            weight,
            packet_length,
            always_backlogged: true,
            arrival_rate: None,
        }
    }

    pub fn poisson(id: u32, weight: f64, packet_length: LengthModel, rate: f64) -> Self {
        AgentSpec {
            id: AgentId(id),
            weight,
            packet_length,
            always_backlogged: false,
            arrival_rate: Some(rate),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::param(
                "weight",
                format!("agent {} has non-positive weight {}", self.id, self.weight),
            ));
        }
        self.packet_length.validate()?;
        if !self.always_backlogged {
            match self.arrival_rate {
                Some(r) if r.is_finite() && r > 0.0 => {}
                _ => {
                    return Err(Error::param(
                        "arrival_rate",
                        format!("agent {} is not saturated and needs a positive arrival_rate", self.id),
                    ))
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_weight() {
        let a = AgentSpec::saturated(3, -1.0, LengthModel::Fixed { bytes: 10 });
        let err = a.validate().unwrap_err();
        assert!(err.to_string().contains("agent 3"));
        let z = AgentSpec::saturated(0, 0.0, LengthModel::Fixed { bytes: 10 });
        assert!(z.validate().is_err());
    }

    #[test]
    fn rejects_zero_length() {
        assert!(LengthModel::Fixed { bytes: 0 }.validate().is_err());
        assert!(LengthModel::Uniform { lo: 0, hi: 4 }.validate().is_err());
        assert!(LengthModel::Uniform { lo: 5, hi: 4 }.validate().is_err());
    }

    #[test]
    fn truncated_exponential_stays_in_range() {
        let m = LengthModel::TruncatedExponential { mean: 500.0, max: 1500 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let l = m.sample(&mut rng);
            assert!((1..=1500).contains(&l));
            sum += l as f64;
        }
        let emp = sum / n as f64;
        assert!((emp - m.mean_bytes()).abs() < 5.0, "{emp} vs {}", m.mean_bytes());
    }

    #[test]
    fn uniform_mean() {
        let m = LengthModel::Uniform { lo: 1008, hi: 3024 };
        assert_eq!(m.mean_bytes(), 2016.0);
        assert_eq!(m.max_bytes(), 3024);
    }
}
