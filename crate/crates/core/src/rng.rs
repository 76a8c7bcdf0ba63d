//! Deterministic random streams keyed by (seed, trial, stream tag).
//!
//! Each key maps to an independent ChaCha8 stream, so results do not depend
//! on the order in which a worker pool schedules trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags; each one selects a distinct ChaCha stream for the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Signal = 1,
    Noise = 2,
    Auxiliary = 3,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the generator for one (seed, trial, stream) key.
pub fn stream_rng(seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ splitmix64(trial.wrapping_add(0xA5A5_5A5A));
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

/// Mixes a sub-key (e.g. an experiment cell index) into a base seed.
pub fn derive_seed(seed: u64, sub: u64) -> u64 {
    splitmix64(seed ^ splitmix64(sub.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

/// The pair of independent generators consumed by snapshot synthesis.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub signal: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self {
            signal: stream_rng(seed, trial, Stream::Signal),
            noise: stream_rng(seed, trial, Stream::Noise),
        }
    }
}
