//! Seeded, splittable pseudorandomness.
//!
//! Every random quantity in the crate is drawn from a [`Substream`]: a
//! ChaCha20 generator (`rand_chacha` 0.3.1) keyed by the 32 bytes
//! `seed.value ‖ seed.stream ‖ purpose ‖ major` (little endian) with the
//! ChaCha stream id set to `minor`. Distinct tuples select distinct
//! key/nonce pairs, so substreams are independent by construction of the
//! cipher. Uniforms use the top 53 bits of a `u64` shifted to the open
//! interval (0, 1), and all transcendental functions go through `libm`, so
//! draws are bit-for-bit identical on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Root seed plus a replica id used to derive independent streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(value: u64) -> Self {
        Self { value, stream: 0 }
    }

    pub const fn with_stream(value: u64, stream: u64) -> Self {
        Self { value, stream }
    }

    /// Seed for Monte Carlo replica `id`, independent of every other replica.
    pub const fn replica(self, id: u64) -> Self {
        Self {
            value: self.value,
            stream: self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id.wrapping_add(1)),
        }
    }

    pub fn substream(self, purpose: Purpose, major: u64, minor: u64) -> Substream {
        Substream::new(self, purpose, major, minor)
    }
}

/// What a substream is used for. The tag is part of the cipher key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Nucleation = 1,
    VariateForward = 2,
    VariateBackward = 3,
    Environment = 4,
    ArrayDynamics = 5,
    PngNucleation = 6,
    PushAsep = 7,
    Bootstrap = 8,
    Generic = 9,
}

/// Maps a signed index onto `u64` so that small magnitudes stay small.
pub const fn zigzag(i: i64) -> u64 {
    ((i << 1) ^ (i >> 63)) as u64
}

#[derive(Clone, Debug)]
pub struct Substream {
    rng: ChaCha20Rng,
}

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

impl Substream {
    pub fn new(seed: Seed, purpose: Purpose, major: u64, minor: u64) -> Self {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.value.to_le_bytes());
        key[8..16].copy_from_slice(&seed.stream.to_le_bytes());
        key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
        key[24..32].copy_from_slice(&major.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(minor);
        Self { rng }
    }

    /// Positions the stream at its `k`-th `u64` draw.
    pub fn seek(&mut self, k: u64) {
        self.rng.set_word_pos(u128::from(k) * 2);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift, unbiased).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Exponential variate with the given mean (inversion).
    pub fn exponential(&mut self, mean: f64) -> f64 {
        -mean * libm::log(self.uniform())
    }

    /// Poisson variate by sequential inversion; large means are split.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        const CHUNK: f64 = 500.0;
        if mean <= 0.0 {
            return 0;
        }
        let mut remaining = mean;
        let mut total = 0;
        while remaining > CHUNK {
            total += self.poisson_small(CHUNK);
            remaining -= CHUNK;
        }
        total + self.poisson_small(remaining)
    }

    fn poisson_small(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = libm::exp(-mean);
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                break;
            }
            cdf = next;
        }
        k
    }

    /// Geometric variate with `P(k) = (1 - r) r^k`, `0 < r < 1`, by
    /// inversion of the closed-form CDF.
    pub fn geometric(&mut self, r: f64) -> u64 {
        debug_assert!(r > 0.0 && r < 1.0);
        let k = libm::floor(libm::log(self.uniform()) / libm::log(r));
        if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        }
    }
}
