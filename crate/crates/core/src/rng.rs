//! Counter-based reproducible random number generation.
//!
//! Every stochastic operation in this crate draws from [`SplitMix64`],
//! seeded either directly or through [`derive_stream`]. The derivation is
//! a pure function of `(seed, index)`, so per-sample streams are identical
//! no matter how samples are partitioned across workers.

use num_bigint::{BigInt, Sign};

use crate::{Int, Rat};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective 64-bit mix.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform integer in `[0, n)` by rejection, unbiased. `n` must be positive.
    pub fn next_below(&mut self, n: &Int) -> Int {
        assert!(n.sign() == Sign::Plus, "next_below requires n > 0");
        let bits = n.bits();
        let words = bits.div_ceil(64).max(1);
        let excess = (words * 64 - bits) as u32;
        loop {
            let mut digits = Vec::with_capacity(words as usize);
            for _ in 0..words {
                digits.push(self.next_u64());
            }
            if let Some(last) = digits.last_mut() {
                *last >>= excess;
            }
            let candidate = BigInt::from_slice(
                Sign::Plus,
                &digits
                    .iter()
                    .flat_map(|w| [*w as u32, (*w >> 32) as u32])
                    .collect::<Vec<_>>(),
            );
            if &candidate < n {
                return candidate;
            }
        }
    }

    /// Uniform rational in `[0, 1)` with 128-bit resolution.
    pub fn unit_rational(&mut self) -> Rat {
        let hi = self.next_u64();
        let lo = self.next_u64();
        let num = (Int::from(hi) << 64) + Int::from(lo);
        Rat::new(num, Int::from(1u8) << 128)
    }
}

/// Derives the stream for sample `index` under master seed `seed`.
///
/// The mapping is `state = mix64(seed ^ mix64((index + 1) * GOLDEN))`; the
/// resulting stream depends only on `(seed, index)`.
pub fn derive_stream(seed: u64, index: u64) -> SplitMix64 {
    let salt = mix64(index.wrapping_add(1).wrapping_mul(GOLDEN));
    SplitMix64::new(mix64(seed ^ salt))
}
