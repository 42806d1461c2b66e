//! Reproducible random streams.
//!
//! Every trajectory draws from its own generator whose seed is derived from
//! a master seed and a path of integer labels (iteration, gap, direction,
//! trajectory index, ...). Because a stream depends only on its label path,
//! parallel and serial runs produce bit-identical samples.

use rand::RngExt;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;

/// Generator used for every simulated trajectory.
pub type StreamRng = Pcg64;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the seed tree. Cheap to copy; children are derived by hashing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(u64);

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed(mix64(master.wrapping_add(GOLDEN_GAMMA)))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Derive the seed of the `label`-th child stream.
    #[inline]
    pub fn child(self, label: u64) -> Seed {
        Seed(mix64(
            self.0 ^ mix64(label.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        ))
    }

    /// Build the generator for this node. Distinct nodes get distinct PCG
    /// streams (increments) as well as distinct states.
    #[inline]
    pub fn rng(self) -> StreamRng {
        let hi = mix64(self.0 ^ 0x5851_f42d_4c95_7f2d);
        let state = ((hi as u128) << 64) | self.0 as u128;
        let stream = ((mix64(hi) as u128) << 64) | mix64(self.0.rotate_left(17)) as u128;
        Pcg64::new(state, stream)
    }
}

/// One standard normal draw.
#[inline]
pub fn std_normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// One uniform draw on `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut StreamRng) -> f64 {
    rng.random::<f64>()
}
