//! Simple random walk trajectories on the integers.
//!
//! Increments are bits of the counter generator in [`crate::rng`]: step `t`
//! is bit `t % 64` of `word(t / 64)`, one meaning `+1`. Short walks keep
//! their words in memory. Long ones keep only the seed and recompute words,
//! so a 2^30-step walk costs no memory beyond whatever its consumer keeps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::StreamKey;
use crate::sites::OffsetVec;

/// Walks up to this many steps keep their increments in memory.
pub const MATERIALIZE_LIMIT: u64 = 1 << 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("time {requested} is beyond the trajectory length {len}")]
    OutOfRange { requested: u64, len: u64 },
    #[error("increment {value} at index {index} is not +1 or -1")]
    BadIncrement { index: usize, value: i64 },
    #[error("positions must start at 0 and move by one; broken at index {index}")]
    BadPositions { index: usize },
}

/// Per-byte step tables: a byte holds 8 consecutive steps, LSB first.
/// `hi`/`lo` are the extreme partial sums after 1..=8 steps.
pub struct ByteTable {
    pub sum: [i8; 256],
    pub hi: [i8; 256],
    pub lo: [i8; 256],
}

impl ByteTable {
    const fn build() -> Self {
        let mut sum = [0i8; 256];
        let mut hi = [0i8; 256];
        let mut lo = [0i8; 256];
        let mut b = 0;
        while b < 256 {
            let mut s: i8 = 0;
            let mut mx: i8 = -8;
            let mut mn: i8 = 8;
            let mut j = 0;
            while j < 8 {
                s += if (b >> j) & 1 == 1 { 1 } else { -1 };
                if s > mx {
                    mx = s;
                }
                if s < mn {
                    mn = s;
                }
                j += 1;
            }
            sum[b] = s;
            hi[b] = mx;
            lo[b] = mn;
            b += 1;
        }
        ByteTable { sum, hi, lo }
    }
}

pub static BYTES: ByteTable = ByteTable::build();

#[inline(always)]
pub fn step_of(word: u64, bit: u64) -> i64 {
    (((word >> bit) & 1) as i64) * 2 - 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Increments {
    Stored(Vec<u64>),
    Seeded,
}

/// A ±1 path of fixed length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    seed: u64,
    len: u64,
    increments: Increments,
}

/// Random access to increment words without caring where they live.
#[derive(Clone, Copy)]
pub enum Words<'a> {
    Slice(&'a [u64]),
    Key(StreamKey),
}

impl Words<'_> {
    #[inline(always)]
    pub fn get(&self, i: u64) -> u64 {
        match self {
            Words::Slice(s) => s[i as usize],
            Words::Key(k) => k.word(i),
        }
    }
}

/// Summary record of one walk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub seed: u64,
    pub n: u64,
    pub final_position: i64,
    pub min: i64,
    pub max: i64,
    pub range: u64,
}

/// Exact visit counts `L(x, n)`, stored densely from the running minimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalTimeField {
    n: u64,
    counts: OffsetVec<u64>,
}

impl LocalTimeField {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn get(&self, x: i64) -> u64 {
        self.counts.get(x)
    }

    /// `sum_x L(x, n)`; always `n + 1`.
    pub fn total(&self) -> u64 {
        self.counts.as_slice().iter().sum()
    }

    /// `L(n) = max_x L(x, n)`.
    pub fn max(&self) -> u64 {
        self.counts.as_slice().iter().copied().max().unwrap_or(0)
    }

    pub fn support_size(&self) -> u64 {
        self.counts.as_slice().iter().filter(|&&c| c > 0).count() as u64
    }

    /// Visited sites with their counts, increasing in `x`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().filter(|&(_, c)| c > 0)
    }
}

/// Streaming visit counter.
#[derive(Clone, Debug, Default)]
pub struct LocalTimeCounter {
    pos: i64,
    t: u64,
    counts: OffsetVec<u32>,
}

impl LocalTimeCounter {
    pub fn new() -> Self {
        let mut counts = OffsetVec::with_window(-64, 64);
        *counts.get_mut(0) = 1;
        LocalTimeCounter { pos: 0, t: 0, counts }
    }

    #[inline(always)]
    pub fn push(&mut self, step: i64) {
        self.pos += step;
        self.t += 1;
        if !self.counts.contains(self.pos) {
            self.counts.ensure(self.pos);
        }
        let i = self.counts.slot(self.pos);
        self.counts.as_mut_slice()[i] += 1;
    }

    /// Feed `count` steps of `words` starting at step `from`.
    pub fn feed(&mut self, words: &Words, from: u64, count: u64) {
        for t in from..from + count {
            self.push(step_of(words.get(t >> 6), t & 63));
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn max(&self) -> u64 {
        self.counts.as_slice().iter().copied().max().unwrap_or(0) as u64
    }

    pub fn field(&self) -> LocalTimeField {
        let mut counts = OffsetVec::new();
        for (x, c) in self.counts.iter().filter(|&(_, c)| c > 0) {
            *counts.get_mut(x) = u64::from(c);
        }
        LocalTimeField { n: self.t, counts }
    }
}

/// Running extrema of a walk fed a word at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Extrema {
    pub pos: i64,
    pub min: i64,
    pub max: i64,
}

impl Default for Extrema {
    fn default() -> Self {
        Extrema {
            pos: 0,
            min: 0,
            max: 0,
        }
    }
}

impl Extrema {
    /// Advance by the first `nbits` steps of `word`.
    #[inline]
    pub fn feed_word(&mut self, word: u64, nbits: u32) {
        let full = nbits / 8;
        let mut w = word;
        for _ in 0..full {
            let b = (w & 0xFF) as usize;
            self.max = self.max.max(self.pos + i64::from(BYTES.hi[b]));
            self.min = self.min.min(self.pos + i64::from(BYTES.lo[b]));
            self.pos += i64::from(BYTES.sum[b]);
            w >>= 8;
        }
        for j in 0..nbits % 8 {
            self.pos += step_of(w, u64::from(j));
            self.max = self.max.max(self.pos);
            self.min = self.min.min(self.pos);
        }
    }

    /// Feed steps `0..n` of `words`.
    pub fn scan(words: &Words, n: u64) -> Self {
        let mut e = Extrema::default();
        let full = n / 64;
        for i in 0..full {
            e.feed_word(words.get(i), 64);
        }
        if n % 64 != 0 {
            e.feed_word(words.get(full), (n % 64) as u32);
        }
        e
    }

    pub fn range(&self) -> u64 {
        (self.max - self.min + 1) as u64
    }
}

/// Walk with `n` steps drawn from `seed`.
pub fn generate_walk(seed: u64, n: u64) -> Trajectory {
    generate_walk_with_limit(seed, n, MATERIALIZE_LIMIT)
}

/// As [`generate_walk`], storing increments only when `n <= limit`.
pub fn generate_walk_with_limit(seed: u64, n: u64, limit: u64) -> Trajectory {
    let increments = if n <= limit {
        let key = StreamKey::new(seed, 0);
        let nw = n.div_ceil(64);
        let mut words: Vec<u64> = (0..nw).map(|i| key.word(i)).collect();
        mask_tail(&mut words, n);
        Increments::Stored(words)
    } else {
        Increments::Seeded
    };
    Trajectory {
        seed,
        len: n,
        increments,
    }
}

fn mask_tail(words: &mut [u64], n: u64) {
    if n % 64 != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
}

impl Trajectory {
    /// Path with the given increments; seed is recorded as 0.
    pub fn from_increments(steps: &[i64]) -> Result<Self, WalkError> {
        let n = steps.len() as u64;
        let mut words = vec![0u64; steps.len().div_ceil(64)];
        for (i, &s) in steps.iter().enumerate() {
            match s {
                1 => words[i / 64] |= 1 << (i % 64),
                -1 => {}
                v => return Err(WalkError::BadIncrement { index: i, value: v }),
            }
        }
        Ok(Trajectory {
            seed: 0,
            len: n,
            increments: Increments::Stored(words),
        })
    }

    /// Path through the given positions, which must start at 0.
    pub fn from_positions(positions: &[i64]) -> Result<Self, WalkError> {
        if positions.first() != Some(&0) {
            return Err(WalkError::BadPositions { index: 0 });
        }
        let steps: Vec<i64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = steps.iter().position(|s| s.abs() != 1) {
            return Err(WalkError::BadPositions { index: i + 1 });
        }
        Self::from_increments(&steps)
    }

    /// Path whose increments are the low `n` bits of `bits`, LSB first.
    pub fn from_bits(bits: u64, n: u32) -> Self {
        assert!(n <= 64);
        let mut words = vec![bits];
        mask_tail(&mut words, u64::from(n));
        if n == 0 {
            words.clear();
        }
        Trajectory {
            seed: 0,
            len: u64::from(n),
            increments: Increments::Stored(words),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.increments, Increments::Stored(_))
    }

    pub fn words(&self) -> Words<'_> {
        match &self.increments {
            Increments::Stored(w) => Words::Slice(w),
            Increments::Seeded => Words::Key(StreamKey::new(self.seed, 0)),
        }
    }

    fn check(&self, n: u64) -> Result<(), WalkError> {
        if n > self.len {
            Err(WalkError::OutOfRange {
                requested: n,
                len: self.len,
            })
        } else {
            Ok(())
        }
    }

    /// Increment `t` (0-based), as ±1.
    pub fn step(&self, t: u64) -> i64 {
        assert!(t < self.len);
        step_of(self.words().get(t >> 6), t & 63)
    }

    /// `S_0, ..., S_n` for the whole path, computed on the fly.
    pub fn positions(&self) -> impl Iterator<Item = i64> + '_ {
        let words = self.words();
        std::iter::once(0).chain((0..self.len).scan(0i64, move |s, t| {
            *s += step_of(words.get(t >> 6), t & 63);
            Some(*s)
        }))
    }

    /// `S_0, ..., S_n` as a vector.
    pub fn positions_to(&self, n: u64) -> Result<Vec<i64>, WalkError> {
        self.check(n)?;
        Ok(self.positions().take(n as usize + 1).collect())
    }

    pub fn position_at(&self, n: u64) -> Result<i64, WalkError> {
        self.check(n)?;
        let words = self.words();
        let full = n / 64;
        let mut ones: i64 = (0..full)
            .map(|i| i64::from(words.get(i).count_ones()))
            .sum();
        if n % 64 != 0 {
            let w = words.get(full) & ((1u64 << (n % 64)) - 1);
            ones += i64::from(w.count_ones());
        }
        Ok(2 * ones - n as i64)
    }

    /// `(min_{t<=n} S_t, max_{t<=n} S_t)`.
    pub fn running_extrema(&self, n: u64) -> Result<(i64, i64), WalkError> {
        self.check(n)?;
        let e = Extrema::scan(&self.words(), n);
        Ok((e.min, e.max))
    }

    /// Number of distinct sites visited by time `n`.
    pub fn range_size(&self, n: u64) -> Result<u64, WalkError> {
        let (lo, hi) = self.running_extrema(n)?;
        Ok((hi - lo + 1) as u64)
    }

    pub fn local_times(&self, n: u64) -> Result<LocalTimeField, WalkError> {
        self.check(n)?;
        let mut c = LocalTimeCounter::new();
        c.feed(&self.words(), 0, n);
        Ok(c.field())
    }

    pub fn summary(&self, n: u64) -> Result<WalkSummary, WalkError> {
        self.check(n)?;
        let e = Extrema::scan(&self.words(), n);
        Ok(WalkSummary {
            seed: self.seed,
            n,
            final_position: e.pos,
            min: e.min,
            max: e.max,
            range: e.range(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_table_matches_bit_loop() {
        for b in 0..256usize {
            let mut s = 0i64;
            let (mut hi, mut lo) = (i64::MIN, i64::MAX);
            for j in 0..8 {
                s += step_of(b as u64, j);
                hi = hi.max(s);
                lo = lo.min(s);
            }
            assert_eq!(i64::from(BYTES.sum[b]), s);
            assert_eq!(i64::from(BYTES.hi[b]), hi);
            assert_eq!(i64::from(BYTES.lo[b]), lo);
        }
    }

    #[test]
    fn empty_walk() {
        let w = generate_walk(5, 0);
        assert_eq!(w.positions().collect::<Vec<_>>(), vec![0]);
        assert_eq!(w.range_size(0).unwrap(), 1);
        assert_eq!(w.running_extrema(0).unwrap(), (0, 0));
        let lt = w.local_times(0).unwrap();
        assert_eq!(lt.get(0), 1);
        assert_eq!(lt.total(), 1);
    }

    #[test]
    fn forced_increments() {
        let w = Trajectory::from_increments(&[1, -1, -1, 1]).unwrap();
        assert_eq!(w.positions().collect::<Vec<_>>(), vec![0, 1, 0, -1, 0]);
        assert_eq!(w.running_extrema(4).unwrap(), (-1, 1));
        let lt = w.local_times(4).unwrap();
        assert_eq!((lt.get(0), lt.get(1), lt.get(-1)), (3, 1, 1));
        assert!(Trajectory::from_increments(&[1, 0]).is_err());
    }

    #[test]
    fn range_of_excursion_path() {
        let w = Trajectory::from_positions(&[0, 1, 2, 1, 0, -1, -2, -1, 0]).unwrap();
        assert_eq!(w.range_size(8).unwrap(), 5);
        assert!(Trajectory::from_positions(&[0, 2]).is_err());
        assert!(Trajectory::from_positions(&[1, 2]).is_err());
    }

    #[test]
    fn monotone_path_extrema() {
        let m = 77;
        let w = Trajectory::from_increments(&vec![1; m]).unwrap();
        assert_eq!(w.running_extrema(m as u64).unwrap(), (0, m as i64));
    }

    #[test]
    fn out_of_range_is_an_error() {
        let w = generate_walk(1, 10);
        assert_eq!(
            w.range_size(11),
            Err(WalkError::OutOfRange {
                requested: 11,
                len: 10
            })
        );
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_walk(123, 1_000_000);
        let b = generate_walk(123, 1_000_000);
        assert_eq!(a, b);
        assert!(a.positions().eq(b.positions()));
        assert_ne!(a, generate_walk(124, 1_000_000));
    }

    #[test]
    fn stored_and_seeded_agree() {
        let n = 10_000;
        let a = generate_walk_with_limit(9, n, u64::MAX);
        let b = generate_walk_with_limit(9, n, 0);
        assert!(a.is_materialized() && !b.is_materialized());
        assert!(a.positions().eq(b.positions()));
        assert_eq!(a.summary(n).unwrap(), b.summary(n).unwrap());
    }

    #[test]
    fn position_at_matches_prefix_sums() {
        let w = generate_walk(4, 1000);
        let pos: Vec<i64> = w.positions().collect();
        for n in [0u64, 1, 63, 64, 65, 999, 1000] {
            assert_eq!(w.position_at(n).unwrap(), pos[n as usize]);
        }
    }
}
