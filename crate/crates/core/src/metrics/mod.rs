//! Fairness and throughput measurement, and trace validation.

mod fairness;
mod throughput;
mod validate;

pub use fairness::{
    jain_fairness_index, sliding_window_fairness, sliding_window_fairness_of,
    FairnessWindowSeries,
};
pub use throughput::{per_agent_throughput, ThroughputReport};
pub use validate::{validate_trace, CheckKind, Violation, ViolationReport, TOLERANCE};
