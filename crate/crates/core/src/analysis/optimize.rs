use crate::analysis::throughput::ModelShape;
use crate::error::{Error, Result};

const PRESCAN_POINTS: usize = 2000;

/// Upper end of the attempt-rate search. With a per-packet resolution cost
/// the throughput dips past `G ~ 3` and then creeps back up towards an
/// asymptote, so the search stays in the operating region below that.
pub const DEFAULT_G_HI: f64 = 2.0;

/// Golden-section search for the maximum of `f` on `[lo, hi]`. Returns the
/// maximizer once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Attempt rate in `(0, g_hi]` maximizing saturation throughput.
///
/// A grid pre-scan checks that the profile rises then falls (plateaus
/// allowed); the maximum is then refined by golden-section search inside the
/// bracketing grid cells.
pub fn optimal_attempt_rate(shape: &ModelShape, g_hi: f64) -> Result<f64> {
    if !(g_hi.is_finite() && g_hi > 0.0) {
        return Err(Error::param("g_hi", format!("must be positive, got {g_hi}")));
    }
    let step = g_hi / PRESCAN_POINTS as f64;
    let grid: Vec<f64> = (1..=PRESCAN_POINTS).map(|i| i as f64 * step).collect();
    let values = grid
        .iter()
        .map(|&g| shape.throughput(g))
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    let slack = 1e-12;
    let rising = values[..=best].windows(2).all(|w| w[1] >= w[0] - slack);
    let falling = values[best..].windows(2).all(|w| w[1] <= w[0] + slack);
    if !(rising && falling) {
        return Err(Error::NotUnimodal { g_hi });
    }
    if best + 1 == grid.len() {
        return Ok(g_hi);
    }
    let lo = if best == 0 { 1e-12 } else { grid[best - 1] };
    let hi = grid[best + 1];
    golden_section_max(|g| shape.throughput(g), lo, hi, 1e-7)
}
