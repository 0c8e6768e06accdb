//! The shared-medium simulator.

mod scenario;
mod sim;
mod summary;
mod timing;
mod trace;

pub use scenario::{
    default_cw_max, default_cw_min, default_m, AlphaPolicy, Scenario, DEFAULT_WEIGHTS,
    MEAN_MESSAGE_BYTES,
};
pub use sim::{collision_phase, run_simulation, CollisionPhase, Contender, PhaseEvent};
pub use summary::{AgentSummary, RunSummary, SlotCounts};
pub use timing::{cts_timeout_default, frame_exchange_duration, AccessMode, TimingParams};
pub use trace::{
    departures_of, read_events_csv, write_events_csv, Departure, EventKind,
    GeneralizedSlotRecord, Trace, TraceEvent, TraceMetadata,
};
