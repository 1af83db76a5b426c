//! Counter-based derivation of independent random streams.
//!
//! Every stream is keyed by the master seed and a path of counters
//! (phase id, generation, individual, realization, ...). Each counter is
//! folded in with a SplitMix64 finalizer, so a stream depends only on its
//! key and never on the order in which other streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub mod phase {
    pub const SIMULATION: u64 = 1;
    pub const GA_INIT: u64 = 2;
    pub const GA_EVAL: u64 = 3;
    pub const GA_VARIATION: u64 = 4;
    pub const HILL_CLIMB: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_paths_give_distinct_seeds() {
        let a = derive_seed(7, &[phase::SIMULATION, 0]);
        let b = derive_seed(7, &[phase::SIMULATION, 1]);
        let c = derive_seed(8, &[phase::SIMULATION, 0]);
        let d = derive_seed(7, &[phase::GA_EVAL, 0]);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, derive_seed(7, &[phase::SIMULATION, 0]));
    }
}
