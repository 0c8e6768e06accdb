//! Exact attempt-count law versus its Poisson approximation.

use crate::error::{Error, Result};

/// Law of the number of successes among independent Bernoulli trials, by
/// dynamic programming over trials.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    let mut pmf = vec![1.0];
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("probability out of range: {p}")));
        }
        let mut next = vec![0.0; pmf.len() + 1];
        for (n, &q) in pmf.iter().enumerate() {
            next[n] += q * (1.0 - p);
            next[n + 1] += q * p;
        }
        pmf = next;
    }
    Ok(pmf)
}

pub fn poisson_pmf(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut term = (-lambda).exp();
    for n in 0..=n_max {
        out.push(term);
        term *= lambda / (n + 1) as f64;
    }
    out
}

/// Total-variation distance between the exact count law of `probs` and
/// Poisson with the same mean. The Poisson tail beyond `probs.len()` counts
/// fully, since the exact law puts no mass there.
pub fn poisson_tv_distance(probs: &[f64]) -> Result<f64> {
    let exact = poisson_binomial_pmf(probs)?;
    let lambda: f64 = probs.iter().sum();
    let approx = poisson_pmf(lambda, probs.len());
    let body: f64 = exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).sum();
    let tail = (1.0 - approx.iter().sum::<f64>()).max(0.0);
    Ok(0.5 * (body + tail))
}
