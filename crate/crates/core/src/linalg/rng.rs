//! Seeded, platform-independent pseudo-random numbers.
//!
//! The generator is xoshiro256** (Blackman & Vigna). State is filled from the
//! 64-bit seed with splitmix64:
//!
//! ```text
//! splitmix64:  z += 0x9E3779B97F4A7C15
//!              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!              z ^ (z >> 31)
//!
//! xoshiro256**: out = rotl(s1 * 5, 7) * 9
//!               t = s1 << 17
//!               s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3
//!               s2 ^= t;  s3 = rotl(s3, 45)
//! ```
//!
//! Only integer arithmetic is involved, so a given seed yields the same
//! stream on every platform. Floats in `[0, 1)` take the top 53 bits.
//! Independent child streams are obtained with [`SeededRng::derive`], which
//! hashes `(seed, stream)` through splitmix64; use one child per task rather
//! than sharing a generator across threads.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
    s: [u64; 4],
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        // all-zero state is a fixed point; splitmix64 never emits four zeros
        // in a row, but keep the generator valid regardless.
        if s.iter().all(|&x| x == 0) {
            s[0] = GOLDEN;
        }
        SeededRng { seed, s }
    }

    /// Child generator for stream `stream` of `seed`. Deterministic and
    /// independent of any generator state.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut sm = seed ^ stream.wrapping_mul(0xD134_2543_DE82_EF95);
        let child = splitmix64(&mut sm) ^ splitmix64(&mut sm).rotate_left(17);
        SeededRng::new(child)
    }

    /// Child generator seeded from this generator's next output.
    pub fn fork(&mut self) -> Self {
        SeededRng::new(self.next_u64())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn step(&mut self) -> u64 {
        let s = &mut self.s;
        let out = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        out
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.step() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Rademacher draw: `+1.0` or `-1.0` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.step() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `0..n` (rejection sampling, no modulo bias).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.step();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        (self.step() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.step()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.step().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
