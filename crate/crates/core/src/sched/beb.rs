use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary exponential backoff contention window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BebState {
    pub cw: u64,
    pub cw_min: u64,
    pub cw_max: u64,
}

impl BebState {
    pub fn new(cw_min: u64, cw_max: u64) -> Result<Self> {
        if cw_min > cw_max {
            return Err(Error::param(
                "cw_min",
                format!("cw_min {cw_min} exceeds cw_max {cw_max}"),
            ));
        }
        Ok(BebState {
            cw: cw_min,
            cw_min,
            cw_max,
        })
    }

    /// Uniform integer on `[0, cw]`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(0..=self.cw)
    }

    pub fn on_collision(&mut self) {
        self.cw = (2 * self.cw + 1).min(self.cw_max);
    }

    pub fn on_success(&mut self) {
        self.cw = self.cw_min;
    }
}

/// Draws a BEB backoff from `state`.
pub fn beb_draw<R: Rng + ?Sized>(state: &BebState, rng: &mut R) -> u64 {
    state.draw(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_window() {
        let s = BebState::new(0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| beb_draw(&s, &mut rng) == 0));
    }

    #[test]
    fn uniform_mean_over_window() {
        let s = BebState::new(15, 1023).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0u64;
        let mut seen = [false; 16];
        for _ in 0..n {
            let b = beb_draw(&s, &mut rng);
            assert!(b <= 15);
            seen[b as usize] = true;
            sum += b;
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - 7.5).abs() < 0.1, "mean {mean}");
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn doubling_and_reset() {
        let mut s = BebState::new(15, 1023).unwrap();
        s.on_collision();
        assert_eq!(s.cw, 31);
        s.on_collision();
        assert_eq!(s.cw, 63);
        for _ in 0..10 {
            s.on_collision();
        }
        assert_eq!(s.cw, 1023);
        s.on_success();
        assert_eq!(s.cw, 15);
        assert!(BebState::new(16, 15).is_err());
    }
}
