//! Counter-based random substreams.
//!
//! Every `(master seed, scenario, lane)` triple maps to its own ChaCha8
//! keystream: the seed and scenario id pick the key, the lane picks the
//! 64-bit stream id. Any worker can therefore rebuild the exact stream of
//! any firm without coordination, and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Lane id reserved for the market factor of a scenario.
pub const MARKET_LANE: u64 = u64::MAX;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key material for one scenario; cheap to copy into per-lane streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioKey([u8; 32]);

impl ScenarioKey {
    pub fn new(master_seed: u64, scenario_id: u64) -> Self {
        let mut state = master_seed;
        let salt = splitmix64(&mut state);
        let mut state = salt ^ scenario_id.wrapping_mul(0xD134_2543_DE82_EF95);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self(key)
    }

    /// Stream for one lane (a firm index, or [`MARKET_LANE`]).
    pub fn stream(&self, lane: u64) -> SimRng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(lane);
        rng
    }
}

/// Shorthand for `ScenarioKey::new(seed, scenario).stream(lane)`.
pub fn substream(master_seed: u64, scenario_id: u64, lane: u64) -> SimRng {
    ScenarioKey::new(master_seed, scenario_id).stream(lane)
}
