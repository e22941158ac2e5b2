//! Counter-based, splittable 64-bit generator.
//!
//! Every output word is a pure function of `(seed, stream, counter)`, so a
//! trial can be regenerated from any block boundary and parallel trials never
//! depend on scheduling. The construction is two rounds of the SplitMix64
//! finalizer:
//!
//! ```text
//! mix64(z)  = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!             z ^= z >> 27; z *= 0x94D049BB133111EB;
//!             z ^ (z >> 31)                      (all arithmetic mod 2^64)
//!
//! key_lo    = mix64(seed ^ 0x9E3779B97F4A7C15)
//! key_lo    = mix64(key_lo + stream * 0xD1B54A32D192ED03)
//! key_hi    = mix64(key_lo ^ 0xA0761D6478BD642F)
//! word(i)   = mix64(mix64(key_lo + (i + 1) * 0x9E3779B97F4A7C15) ^ key_hi)
//! ```
//!
//! Walk increments are read LSB-first: step `t` is bit `t % 64` of
//! `word(t / 64)`, with a set bit meaning `+1`.

use rand_core::{impls, RngCore};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_GAMMA: u64 = 0xD1B5_4A32_D192_ED03;
const HI_SALT: u64 = 0xA076_1D64_78BD_642F;

#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a, used to fold task names into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Task seed: `mix64(mix64(master ^ fnv1a64(task)) ^ mix64(index + 1))`.
pub fn derive_seed(master: u64, task: &str, index: u64) -> u64 {
    mix64(mix64(master ^ fnv1a64(task.as_bytes())) ^ mix64(index.wrapping_add(1)))
}

/// Key for one `(seed, stream)` pair. Cheap to copy; all outputs are pure
/// functions of the key and a counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    lo: u64,
    hi: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        let lo = mix64(seed ^ GOLDEN_GAMMA);
        let lo = mix64(lo.wrapping_add(stream.wrapping_mul(STREAM_GAMMA)));
        let hi = mix64(lo ^ HI_SALT);
        StreamKey { lo, hi }
    }

    #[inline(always)]
    pub fn word(&self, counter: u64) -> u64 {
        let x = self
            .lo
            .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
        mix64(mix64(x) ^ self.hi)
    }

    /// Sequential generator starting at `counter`.
    pub fn rng_at(&self, counter: u64) -> CounterRng {
        CounterRng { key: *self, counter }
    }
}

/// Sequential view over a [`StreamKey`], usable with the `rand` ecosystem.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: StreamKey,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        StreamKey::new(seed, stream).rng_at(0)
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = self.key.word(self.counter);
        self.counter = self.counter.wrapping_add(1);
        w
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }
}
