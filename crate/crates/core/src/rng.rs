//! Deterministic random substreams.
//!
//! Every agent owns independent ChaCha8 streams keyed by `(seed, agent id,
//! purpose)`, so adding an agent or changing the scheduler never perturbs the
//! packet lengths and arrivals drawn by the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::AgentId;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    PacketLength = 0,
    Arrival = 1,
    Contention = 2,
}

const STREAMS_PER_AGENT: u64 = 4;

pub fn substream(seed: u64, agent: AgentId, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent.0 as u64 * STREAMS_PER_AGENT + stream as u64);
    rng
}
