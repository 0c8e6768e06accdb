use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Simulation time in integer nanoseconds since the start of a run.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Tick(pub u64);

impl Tick {
    pub const ZERO: Tick = Tick(0);

    pub const fn from_nanos(ns: u64) -> Self {
        Tick(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        Tick(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        Tick(ms * 1_000_000)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        Tick((s * 1e9).round() as u64)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn as_micros_f64(self) -> f64 {
        self.0 as f64 * 1e-3
    }

    pub fn saturating_sub(self, rhs: Tick) -> Tick {
        Tick(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Tick {
    type Output = Tick;
    fn add(self, rhs: Tick) -> Tick {
        Tick(self.0 + rhs.0)
    }
}

impl AddAssign for Tick {
    fn add_assign(&mut self, rhs: Tick) {
        self.0 += rhs.0;
    }
}

impl Sub for Tick {
    type Output = Tick;
    fn sub(self, rhs: Tick) -> Tick {
        Tick(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Tick {
    fn sum<I: Iterator<Item = Tick>>(iter: I) -> Tick {
        Tick(iter.map(|t| t.0).sum())
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Airtime of `bits` at `rate_bps`, rounded up to the next nanosecond.
pub fn airtime(bits: u64, rate_bps: u64) -> Tick {
    if rate_bps == 0 {
        return Tick::ZERO;
    }
    let num = bits as u128 * 1_000_000_000u128;
    let rate = rate_bps as u128;
    Tick(num.div_ceil(rate) as u64)
}
