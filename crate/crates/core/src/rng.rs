//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`Seed`] derived from a single
//! master seed by a fixed path, e.g. `master -> replicate 17 -> bootstrap 3`.
//! Each node of the path owns an independent ChaCha8 stream, so results do
//! not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stream domains. The tag is mixed into the child seed so that, say,
/// replicate 3 and bootstrap draw 3 never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Replicate = 1,
    Bootstrap = 2,
    Truth = 3,
    Calibration = 4,
    Chunk = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    pub fn child(self, domain: Domain, index: u64) -> Seed {
        let a = splitmix64(self.0 ^ splitmix64(domain as u64));
        Seed(splitmix64(a ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
