use std::io::Write;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Departure, Trace};
use crate::error::{Error, Result};

/// Jain's index over weight-normalized throughputs:
/// `(sum x)^2 / (N sum x^2)` with `x_k = T_k / phi_k`.
pub fn jain_fairness_index(throughputs: &[f64], weights: &[f64]) -> Result<f64> {
    if throughputs.is_empty() || throughputs.len() != weights.len() {
        return Err(Error::param(
            "throughputs",
            format!("{} throughputs for {} weights", throughputs.len(), weights.len()),
        ));
    }
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w <= 0.0) {
        return Err(Error::param("weights", format!("non-positive weight {w}")));
    }
    jain_unchecked(throughputs.iter().zip(weights).map(|(t, w)| t / w), throughputs.len())
        .ok_or(Error::ZeroThroughput)
}

fn jain_unchecked(normalized: impl Iterator<Item = f64>, n: usize) -> Option<f64> {
    let (s, s2) = normalized.fold((0.0, 0.0), |(s, s2), x| (s + x, s2 + x * x));
    (s2 > 0.0).then(|| s * s / (n as f64 * s2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessWindowSeries {
    /// Window size in transmissions.
    pub w: usize,
    /// Index of window `i` covers departures `i .. i + w`.
    pub indices: Vec<f64>,
    pub mean: f64,
}

impl FairnessWindowSeries {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wtr.write_record(["window_start_idx", "index"]).map_err(io)?;
        for (i, x) in self.indices.iter().enumerate() {
            wtr.write_record([i.to_string(), x.to_string()]).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Sliding-window fairness over a trace's departure sequence, step one
/// departure. Every configured agent counts in `N`, including ones with no
/// packet in the window. Per-window throughput shares the window's span as a
/// common divisor, which the index cancels, so bits are used directly.
pub fn sliding_window_fairness(trace: &Trace, w: usize, weights: &[f64]) -> Result<FairnessWindowSeries> {
    let deps: Vec<Departure> = trace.departures().collect();
    sliding_window_fairness_of(&deps, w, weights)
}

pub fn sliding_window_fairness_of(
    deps: &[Departure],
    w: usize,
    weights: &[f64],
) -> Result<FairnessWindowSeries> {
    if w == 0 {
        return Err(Error::param("w", "window must hold at least one transmission"));
    }
    if deps.len() < w {
        return Err(Error::NotEnoughDepartures {
            needed: w,
            available: deps.len(),
        });
    }
    if weights.is_empty() || weights.iter().any(|w| w.is_nan() || *w <= 0.0) {
        return Err(Error::param("weights", "need at least one positive weight"));
    }
    if let Some(d) = deps.iter().find(|d| d.agent.index() >= weights.len()) {
        return Err(Error::UnknownAgent(d.agent));
    }
    let windows = deps.len() - w + 1;
    let indices = window_chunks(windows)
        .map(|(lo, hi)| chunk_indices(deps, w, weights, lo, hi))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect::<Vec<f64>>();
    let mean = indices.iter().sum::<f64>() / indices.len() as f64;
    Ok(FairnessWindowSeries { w, indices, mean })
}

const CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
fn window_chunks(windows: usize) -> impl ParallelIterator<Item = (usize, usize)> {
    (0..windows.div_ceil(CHUNK))
        .into_par_iter()
        .map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(windows)))
}

#[cfg(not(feature = "parallel"))]
fn window_chunks(windows: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..windows.div_ceil(CHUNK)).map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(windows)))
}

/// Indices of windows starting in `lo..hi`, sliding an integer bit count per
/// agent so no rounding accumulates.
fn chunk_indices(deps: &[Departure], w: usize, weights: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let mut bits = vec![0u64; weights.len()];
    for d in &deps[lo..lo + w] {
        bits[d.agent.index()] += d.length_bits;
    }
    let mut out = Vec::with_capacity(hi - lo);
    for start in lo..hi {
        if start > lo {
            let gone = &deps[start - 1];
            let new = &deps[start + w - 1];
            bits[gone.agent.index()] -= gone.length_bits;
            bits[new.agent.index()] += new.length_bits;
        }
        let x = bits.iter().zip(weights).map(|(&b, &p)| b as f64 / p);
        out.push(jain_unchecked(x, weights.len()).unwrap_or(0.0));
    }
    out
}
