//! Distributed self-clocked fair queueing over a shared medium: the
//! scheduler, a slot-level simulator, the saturation-throughput model and
//! fairness metrics.
//!
//! ```
//! use dscfq_core::engine::{run_simulation, Scenario};
//! use dscfq_core::metrics::validate_trace;
//! use dscfq_core::sched::SchedulerKind;
//!
//! let scenario = Scenario::default_network(SchedulerKind::Dscfq, 0.04, 7).with_departures(500);
//! let trace = run_simulation(&scenario).unwrap();
//! assert!(validate_trace(&trace, &scenario).unwrap().is_empty());
//! ```

pub mod accounting;
pub mod agent;
pub mod analysis;
pub mod batch;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod sched;
pub mod time;

pub use error::{Error, Result};
