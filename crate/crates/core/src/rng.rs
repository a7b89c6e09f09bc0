//! Reproducible per-trajectory random streams.
//!
//! Every consumer of randomness gets a ChaCha8 generator keyed by the run
//! seed and a domain tag, positioned on the stream numbered by the
//! trajectory index. ChaCha is counter based, so streams are independent
//! and a trajectory's draws do not depend on how many other trajectories
//! ran before it or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the random streams used by different parts of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    Dynamics = 0x6479_6e61,
    ShotNoise = 0x7073_6e00,
    BackAction = 0x6c73_6b00,
    Optimizer = 0x6f70_7400,
}

pub fn stream_rng(seed: u64, domain: StreamDomain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
