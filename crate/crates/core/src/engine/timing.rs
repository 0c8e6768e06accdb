use serde::{Deserialize, Serialize};

use crate::time::{airtime, Tick};

/// How idle detection after a busy period is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    /// Instantaneous carrier sensing: class II waits one slot after a busy
    /// period, class I pulses as soon as the medium idles.
    Idealized,
    /// Interframe-spacing realization: class II waits LIFS after a busy
    /// period, class I waits HIFS before each pulse.
    Overlay,
}

/// Medium timing. Durations in ns, rates in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingParams {
    pub sigma: Tick,
    pub sifs: Tick,
    pub data_rate: u64,
    pub ctrl_rate: u64,
    pub len_rts: u64,
    pub len_cts: u64,
    pub len_ack: u64,
    /// `None` selects [`cts_timeout_default`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cts_timeout: Option<Tick>,
    pub propagation_delay: Tick,
    pub mode: AccessMode,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            sigma: Tick::from_micros(9),
            sifs: Tick::from_micros(10),
            data_rate: 12_000_000,
            ctrl_rate: 6_000_000,
            len_rts: 160,
            len_cts: 112,
            len_ack: 112,
            cts_timeout: None,
            propagation_delay: Tick::ZERO,
            mode: AccessMode::Overlay,
        }
    }
}

impl TimingParams {
    pub fn idealized() -> Self {
        TimingParams {
            mode: AccessMode::Idealized,
            ..Self::default()
        }
    }

    /// `SIFS + 2σ`
    pub fn hifs(&self) -> Tick {
        self.sifs + Tick(2 * self.sigma.0)
    }

    /// `SIFS + 3σ`
    pub fn lifs(&self) -> Tick {
        self.sifs + Tick(3 * self.sigma.0)
    }

    pub fn rts_airtime(&self) -> Tick {
        airtime(self.len_rts, self.ctrl_rate)
    }

    pub fn cts_airtime(&self) -> Tick {
        airtime(self.len_cts, self.ctrl_rate)
    }

    pub fn ack_airtime(&self) -> Tick {
        airtime(self.len_ack, self.ctrl_rate)
    }

    pub fn data_airtime(&self, length_bits: u64) -> Tick {
        airtime(length_bits, self.data_rate)
    }

    pub fn cts_timeout(&self) -> Tick {
        self.cts_timeout.unwrap_or_else(|| cts_timeout_default(self))
    }

    /// Idle time a class II agent needs after a busy period before the next
    /// generalized slot begins.
    pub fn post_busy_gap(&self) -> Tick {
        match self.mode {
            AccessMode::Idealized => self.sigma,
            AccessMode::Overlay => self.lifs(),
        }
    }

    /// Idle time before each pulse round of the CRP.
    pub fn crp_gap(&self) -> Tick {
        match self.mode {
            AccessMode::Idealized => Tick::ZERO,
            AccessMode::Overlay => self.hifs(),
        }
    }

    /// Medium time wasted by a collided RTS: its airtime plus the CTS timeout.
    pub fn collided_rts_waste(&self) -> Tick {
        self.rts_airtime() + self.propagation_delay + self.cts_timeout()
    }

    /// Duration of a generalized slot carrying one successful exchange.
    pub fn t_succ(&self, length_bits: u64) -> Tick {
        frame_exchange_duration(length_bits, self) + self.post_busy_gap()
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        let positive = [
            ("sigma", self.sigma.0),
            ("sifs", self.sifs.0),
            ("data_rate", self.data_rate),
            ("ctrl_rate", self.ctrl_rate),
            ("len_rts", self.len_rts),
            ("len_cts", self.len_cts),
            ("len_ack", self.len_ack),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if let Some(t) = self.cts_timeout {
            if t.0 == 0 {
                return Err(Error::param("cts_timeout", "must be positive"));
            }
        }
        Ok(())
    }
}

/// RTS/CTS/DATA/ACK exchange time T_s, three SIFS gaps, one propagation
/// delay per frame.
pub fn frame_exchange_duration(length_bits: u64, timing: &TimingParams) -> Tick {
    timing.rts_airtime()
        + timing.sifs
        + timing.cts_airtime()
        + timing.sifs
        + timing.data_airtime(length_bits)
        + timing.sifs
        + timing.ack_airtime()
        + Tick(4 * timing.propagation_delay.0)
}

/// `SIFS + CTS airtime + σ`: the shortest wait that separates a missing CTS
/// from a late one.
pub fn cts_timeout_default(timing: &TimingParams) -> Tick {
    timing.sifs + timing.cts_airtime() + timing.sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let t = TimingParams::default();
        assert_eq!(t.hifs(), Tick::from_micros(28));
        assert_eq!(t.lifs(), Tick::from_micros(37));
        assert!(t.hifs() < t.lifs());
        t.validate().unwrap();
    }

    #[test]
    fn exchange_duration_for_mean_message() {
        let t = TimingParams::default();
        let ts = frame_exchange_duration(2016 * 8, &t);
        // 26.667 + 10 + 18.667 + 10 + 1344 + 10 + 18.667 us
        assert!((ts.as_micros_f64() - 1438.0).abs() < 0.01, "{ts}");
        assert_eq!(t.cts_airtime(), t.ack_airtime());
        assert_eq!(TimingParams::idealized().t_succ(2016 * 8), ts + Tick::from_micros(9));
    }

    #[test]
    fn doubling_data_rate_halves_data_term_only() {
        let t = TimingParams::default();
        let fast = TimingParams {
            data_rate: 24_000_000,
            ..t
        };
        let bits = 2016 * 8;
        assert_eq!(fast.data_airtime(bits), Tick::from_micros(672));
        let diff = frame_exchange_duration(bits, &t) - frame_exchange_duration(bits, &fast);
        assert_eq!(diff, Tick::from_micros(672));
    }

    #[test]
    fn cts_timeout_formula() {
        let t = TimingParams::default();
        assert!((cts_timeout_default(&t).as_micros_f64() - 37.667).abs() < 0.001);
        let fast_ctrl = TimingParams {
            ctrl_rate: u64::MAX,
            ..t
        };
        assert!(
            cts_timeout_default(&fast_ctrl).0 - (t.sifs + t.sigma).0 <= 1,
            "zero-airtime limit"
        );
        let no_slot = TimingParams {
            sigma: Tick::ZERO,
            ..t
        };
        assert_eq!(cts_timeout_default(&no_slot), t.sifs + t.cts_airtime());
    }
}
