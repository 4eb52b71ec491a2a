//! Seed derivation and the pseudo-random generator used everywhere in the crate.
//!
//! Every random stream is a xoshiro256** generator seeded through SplitMix64
//! (`rand_xoshiro::Xoshiro256StarStar::seed_from_u64`). The recurrences are
//! fixed, so traces can be reproduced in any language:
//!
//! * SplitMix64 seeding: `z += 0x9E3779B97F4A7C15; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
//!   z = (z ^ z>>27) * 0x94D049BB133111EB; z ^ z>>31`, applied four times to fill the state.
//! * xoshiro256**: `out = rotl(s1 * 5, 7) * 9`, then the standard shift/xor/rotate update.
//!
//! Derived quantities are defined on top of `next_u64`:
//!
//! * sign: `+1` if the top bit is set, otherwise `-1`;
//! * uniform on `[0, 1)`: `(next_u64 >> 11) * 2^-53`;
//! * index below `n`: `(next_u64 as u128 * n) >> 64`;
//! * standard normal: Box–Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)` (one value per two uniforms);
//! * shuffle: Fisher–Yates from the last index down, swapping `i` with `index_below(i + 1)`.
//!
//! Seeds for sub-streams come from [`derive_seed`], the first eight bytes
//! (little-endian) of `SHA-256(root_le_bytes || label_utf8 || 0x00 || index_le_bytes)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use sha2::{Digest, Sha256};

/// Derives an independent 64-bit seed for the stream `(label, index)` under `root`.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seeded generator with the documented derived draws.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// `+1.0` or `-1.0` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn index_below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index_below(i + 1);
            items.swap(i, j);
        }
    }
}
