use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest normalized service gap allowed between two co-backlogged agents,
/// in service units (bytes per unit weight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessBound {
    pub bound: f64,
}

/// `Lk/phik + Lj/phij + 2/alpha`.
pub fn pairwise_fairness_bound(
    lk_max: f64,
    phik: f64,
    lj_max: f64,
    phij: f64,
    alpha: f64,
) -> Result<FairnessBound> {
    for (name, v) in [
        ("Lk_max", lk_max),
        ("phik", phik),
        ("Lj_max", lj_max),
        ("phij", phij),
        ("alpha", alpha),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    Ok(FairnessBound {
        bound: lk_max / phik + lj_max / phij + 2.0 / alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        let b = pairwise_fairness_bound(2016.0, 8.0, 2016.0, 2.0, 0.04).unwrap();
        assert!((b.bound - 1310.0).abs() < 1e-9);
        let b = pairwise_fairness_bound(2016.0, 8.0, 2016.0, 8.0, 1e12).unwrap();
        assert!((b.bound - 504.0).abs() < 1e-9);
        assert!(pairwise_fairness_bound(2016.0, 0.0, 2016.0, 8.0, 0.04).is_err());
    }
}
