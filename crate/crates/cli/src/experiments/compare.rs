use dscfq_core::batch::run_many_with;
use dscfq_core::engine::Scenario;
use dscfq_core::metrics::sliding_window_fairness;
use dscfq_core::sched::SchedulerKind;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::sweep::with_alpha;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub scheduler: SchedulerKind,
    pub alpha: f64,
    pub w: usize,
    /// Mean SWM fairness, averaged over seeds.
    pub mean: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub cells: Vec<CompareCell>,
}

impl CompareResult {
    pub fn mean(&self, scheduler: SchedulerKind, alpha: f64, w: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.scheduler == scheduler && c.alpha == alpha && c.w == w)
            .map(|c| c.mean)
    }
}

/// Mean sliding-window fairness per scheduler, α and window. Each seed
/// drives the same length draws under every scheduler.
pub fn compare(
    base: &Scenario,
    schedulers: &[SchedulerKind],
    alphas: &[f64],
    windows: &[usize],
    seeds: &[u64],
) -> Result<CompareResult> {
    let mut scenarios = Vec::new();
    for &k in schedulers {
        for &a in alphas {
            for &s in seeds {
                scenarios.push(Scenario {
                    scheduler: k,
                    ..with_alpha(base, a, s)
                });
            }
        }
    }
    let means = run_many_with(&scenarios, |sc, t| {
        windows
            .iter()
            .map(|&w| Ok(sliding_window_fairness(&t, w, &sc.weights())?.mean))
            .collect::<dscfq_core::Result<Vec<f64>>>()
    })?;
    let mut cells = Vec::new();
    let mut chunks = means.chunks(seeds.len());
    for &k in schedulers {
        for &a in alphas {
            let runs = chunks.next().expect("one chunk per (scheduler, alpha)");
            for (wi, &w) in windows.iter().enumerate() {
                let per_seed: Vec<f64> = runs.iter().map(|r| r[wi]).collect();
                cells.push(CompareCell {
                    scheduler: k,
                    alpha: a,
                    w,
                    mean: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
                    per_seed,
                });
            }
        }
    }
    Ok(CompareResult { cells })
}
