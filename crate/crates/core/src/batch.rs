//! Independent runs, fanned out across threads when the `parallel` feature is
//! on. Results come back in input order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::engine::{run_simulation, Scenario, Trace};
use crate::error::Result;

/// Applies `f` to every item, in parallel when available.
pub fn map_runs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs every scenario and reduces each trace with `reduce` before the next
/// one is needed, so large batches never hold all traces at once.
pub fn run_many_with<R, F>(scenarios: &[Scenario], reduce: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&Scenario, Trace) -> Result<R> + Sync + Send,
{
    map_runs(scenarios, |s| run_simulation(s).and_then(|t| reduce(s, t)))
        .into_iter()
        .collect()
}

pub fn run_many(scenarios: &[Scenario]) -> Result<Vec<Trace>> {
    run_many_with(scenarios, |_, t| Ok(t))
}

/// Sequential reference for [`run_many`].
pub fn run_many_seq(scenarios: &[Scenario]) -> Result<Vec<Trace>> {
    scenarios.iter().map(run_simulation).collect()
}
