//! Deterministic random substreams keyed by `(master_seed, path_index, tag)`.
//!
//! Each tag hashes the master seed into a ChaCha key; the path index selects
//! the ChaCha stream. Adding or removing an agent therefore never shifts the
//! draws seen by any other agent or by the price noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::NoiseSource;

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    /// Standard-normal price noise shared by every agent on the path.
    Price,
    /// Uniform fill draws for one agent slot.
    Fills(u32),
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Price => 0x5052_4943_4500_0000,
            StreamTag::Fills(slot) => 0x4649_4c4c_0000_0000 | u64::from(slot),
        }
    }
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds the generator for one substream.
pub fn substream(master_seed: u64, path_index: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master_seed ^ mix(tag.code())));
    rng.set_stream(path_index);
    rng
}

/// Standard-normal price noise for one path.
#[derive(Debug, Clone)]
pub struct NormalStream(ChaCha8Rng);

impl NormalStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self(substream(master_seed, path_index, StreamTag::Price))
    }
}

impl NoiseSource for NormalStream {
    fn next_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// Pairs of uniforms in `[0, 1)` for an agent's ask and bid fill decisions.
#[derive(Debug, Clone)]
pub struct FillStream(ChaCha8Rng);

impl FillStream {
    pub fn new(master_seed: u64, path_index: u64, slot: u32) -> Self {
        Self(substream(master_seed, path_index, StreamTag::Fills(slot)))
    }

    /// `(ask, bid)` uniforms; always consumes exactly two draws.
    pub fn next_pair(&mut self) -> [f64; 2] {
        [self.0.random::<f64>(), self.0.random::<f64>()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = NormalStream::new(7, 3);
        let mut b = NormalStream::new(7, 3);
        let mut c = NormalStream::new(7, 4);
        let xa: Vec<f64> = (0..5).map(|_| a.next_normal()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.next_normal()).collect();
        let xc: Vec<f64> = (0..5).map(|_| c.next_normal()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);

        let mut f0 = FillStream::new(7, 3, 0);
        let mut f1 = FillStream::new(7, 3, 1);
        assert_ne!(f0.next_pair(), f1.next_pair());
    }

    #[test]
    fn uniforms_in_unit_interval() {
        let mut f = FillStream::new(1, 0, 2);
        for _ in 0..10_000 {
            let [u, v] = f.next_pair();
            assert!((0.0..1.0).contains(&u) && (0.0..1.0).contains(&v));
        }
    }
}
