//! k-excursions, their tallies, and the k-induced walk.
//!
//! A visit to `x` at time `j` begins a k-excursion when the walk reaches
//! `x - k` before its next visit to `x`. Two completion rules decide whether
//! such an excursion counts by time `n`:
//!
//! * [`Completion::Reached`] (default): the visit to `x - k` happened by `n`.
//! * [`Completion::Returned`]: in addition, the walk is back at `x` by `n`.
//!
//! Under `Reached`, `T(k, kj, n)` equals the number of down-steps of the
//! k-induced walk from `j`; under `Returned`,
//! `P(T(k, 0, n) >= a) = P(max S >= 2ka)` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::sites::OffsetVec;
use crate::walk::{step_of, Trajectory, WalkError, Words, BYTES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExcursionError {
    #[error("excursion depth must be at least {min}, got {k}")]
    Depth { k: u64, min: u64 },
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("cannot merge tallies with different parameters")]
    Mismatch,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Completion {
    #[default]
    Reached,
    Returned,
}

/// Truncation level for `sum_x min(T, cap)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cap {
    Finite(u64),
    Infinite,
}

impl Cap {
    #[inline]
    pub fn apply(self, v: u64) -> u64 {
        match self {
            Cap::Finite(c) => v.min(c),
            Cap::Infinite => v,
        }
    }

    /// True while a count of `v` is still below the cap.
    #[inline]
    pub fn admits(self, v: u64) -> bool {
        match self {
            Cap::Finite(c) => v < c,
            Cap::Infinite => true,
        }
    }
}

impl Serialize for Cap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cap::Finite(c) => s.serialize_u64(*c),
            Cap::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(c) => Ok(Cap::Finite(c)),
            Raw::S(s) if s == "inf" => Ok(Cap::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!(
                "expected an integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

fn check_depth(k: u64, min: u64) -> Result<(), ExcursionError> {
    if k < min {
        Err(ExcursionError::Depth { k, min })
    } else {
        Ok(())
    }
}

/// `T(k, x, n)` under the default completion rule.
pub fn count_excursions(traj: &Trajectory, k: u64, x: i64, n: u64) -> Result<u64, ExcursionError> {
    count_excursions_with(traj, k, x, n, Completion::Reached)
}

/// `T(k, x, n)` by following the state of the single site `x`.
pub fn count_excursions_with(
    traj: &Trajectory,
    k: u64,
    x: i64,
    n: u64,
    completion: Completion,
) -> Result<u64, ExcursionError> {
    check_depth(k, 1)?;
    if n > traj.len() {
        return Err(WalkError::OutOfRange {
            requested: n,
            len: traj.len(),
        }
        .into());
    }
    let target = x - k as i64;
    // 0: idle, 1: at or since x, 2: reached x - k since the last visit to x.
    let mut state = 0u8;
    let mut count = 0;
    for s in traj.positions().take(n as usize + 1) {
        if s == x {
            if state == 2 {
                count += 1;
            }
            state = 1;
        } else if s == target && state == 1 {
            match completion {
                Completion::Reached => {
                    count += 1;
                    state = 0;
                }
                Completion::Returned => state = 2,
            }
        }
    }
    Ok(count)
}

/// `x -> T(k, x, n)` for every site; zero counts are omitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcursionTally {
    pub k: u64,
    pub n: u64,
    pub completion: Completion,
    pub counts: BTreeMap<i64, u64>,
}

/// Aggregate record of a tally.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyAggregate {
    pub k: u64,
    pub n: u64,
    #[serde(rename = "T_weighted")]
    pub t_weighted: u64,
    pub max: u64,
    pub sum: u64,
}

impl ExcursionTally {
    pub fn get(&self, x: i64) -> u64 {
        self.counts.get(&x).copied().unwrap_or(0)
    }

    /// `T(k, n) = k * sum_x T(k, kx, n)`.
    pub fn weighted_total(&self) -> u64 {
        self.k * self.lattice_count()
    }

    /// `sum_j T(k, kj, n)`.
    pub fn lattice_count(&self) -> u64 {
        let k = self.k as i64;
        self.counts
            .iter()
            .filter(|(x, _)| x.rem_euclid(k) == 0)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn truncated_sum(&self, cap: Cap) -> u64 {
        self.counts.values().map(|&c| cap.apply(c)).sum()
    }

    pub fn plain_sum(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    /// Pointwise sum, for pooling statistics over independent trials. Not a
    /// way to concatenate path segments.
    pub fn merge(&mut self, other: &ExcursionTally) -> Result<(), ExcursionError> {
        if self.k != other.k || self.n != other.n || self.completion != other.completion {
            return Err(ExcursionError::Mismatch);
        }
        for (&x, &c) in &other.counts {
            *self.counts.entry(x).or_insert(0) += c;
        }
        Ok(())
    }

    /// `k,n,x,count` rows, one per nonzero site, without a header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (x, c) in &self.counts {
            let _ = writeln!(out, "{},{},{},{}", self.k, self.n, x, c);
        }
        out
    }

    pub fn aggregate(&self) -> TallyAggregate {
        TallyAggregate {
            k: self.k,
            n: self.n,
            t_weighted: self.weighted_total(),
            max: self.max_count(),
            sum: self.plain_sum(),
        }
    }
}

pub fn excursion_field(traj: &Trajectory, k: u64, n: u64) -> Result<ExcursionTally, ExcursionError> {
    excursion_field_with(traj, k, n, Completion::Reached)
}

/// All of `x -> T(k, x, n)` in one pass over the path.
///
/// Keeps the last visit time of every site. A down-step onto `y` ends an
/// excursion from `y + k` exactly when `y + k` was visited after the previous
/// visit to `y`; an up-step onto `y` closes a returned one when `y - k` was.
pub fn excursion_field_with(
    traj: &Trajectory,
    k: u64,
    n: u64,
    completion: Completion,
) -> Result<ExcursionTally, ExcursionError> {
    check_depth(k, 1)?;
    if n > traj.len() {
        return Err(WalkError::OutOfRange {
            requested: n,
            len: traj.len(),
        }
        .into());
    }
    let k = k as i64;
    let words = traj.words();
    // last visit time + 1; 0 means never visited
    let mut last: OffsetVec<u64> = OffsetVec::with_window(-64, 64);
    let mut counts: OffsetVec<u64> = OffsetVec::with_window(-64, 64);
    *last.get_mut(0) = 1;
    let mut pos = 0i64;
    for t in 1..=n {
        let s = step_of(words.get((t - 1) >> 6), (t - 1) & 63);
        pos += s;
        let prev = last.get(pos);
        match completion {
            Completion::Reached if s < 0 => {
                if last.get(pos + k) > prev {
                    *counts.get_mut(pos + k) += 1;
                }
            }
            Completion::Returned if s > 0 && prev > 0 => {
                if last.get(pos - k) > prev {
                    *counts.get_mut(pos) += 1;
                }
            }
            _ => {}
        }
        *last.get_mut(pos) = t + 1;
    }
    Ok(ExcursionTally {
        k: k as u64,
        n,
        completion,
        counts: counts.iter().filter(|&(_, c)| c > 0).collect(),
    })
}

/// The walk observed at successive first passages to distance `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InducedWalk {
    pub k: u64,
    pub n: u64,
    /// `n_0 = 0, n_1, ..., n_N`.
    pub times: Vec<u64>,
    /// `Y_j = S_{n_j} / k`.
    pub positions: Vec<i64>,
    /// `L^(k)(x, n)`.
    pub local: BTreeMap<i64, u64>,
    /// `l^(k)(x, n)`: steps of `Y` from `x` to `x - 1`.
    pub down: BTreeMap<i64, u64>,
}

impl InducedWalk {
    /// `N_k(n)`.
    pub fn steps(&self) -> u64 {
        self.times.len() as u64 - 1
    }

    /// Jump times `n_1, ..., n_N` (without `n_0`).
    pub fn jumps(&self) -> &[u64] {
        &self.times[1..]
    }

    pub fn local_time(&self, x: i64) -> u64 {
        self.local.get(&x).copied().unwrap_or(0)
    }

    pub fn down_steps(&self, x: i64) -> u64 {
        self.down.get(&x).copied().unwrap_or(0)
    }
}

pub fn induce_walk(traj: &Trajectory, k: u64, n: u64) -> Result<InducedWalk, ExcursionError> {
    check_depth(k, 1)?;
    let positions = traj.positions_to(n)?;
    let ki = k as i64;
    let mut times = vec![0u64];
    let mut ys = vec![0i64];
    let mut local = BTreeMap::from([(0i64, 1u64)]);
    let mut down = BTreeMap::new();
    let mut anchor = 0i64;
    for (t, &s) in positions.iter().enumerate().skip(1) {
        if (s - anchor).abs() == ki {
            let y = *ys.last().unwrap();
            let next = y + (s - anchor).signum();
            if next < y {
                *down.entry(y).or_insert(0) += 1;
            }
            *local.entry(next).or_insert(0) += 1;
            times.push(t as u64);
            ys.push(next);
            anchor = s;
        }
    }
    Ok(InducedWalk {
        k,
        n,
        times,
        positions: ys,
        local,
        down,
    })
}

/// `N_k(n)` straight from increment words, skipping whole bytes that stay
/// strictly inside the current `(-k, k)` window.
pub fn induced_steps(words: &Words, n: u64, k: u64) -> u64 {
    induced_counts(words, n, k).0
}

/// `(N_k(n), number of down-steps of Y^(k) by n)`. Under the reached rule
/// the second entry is the lattice count `sum_j T(k, jk, n)`.
pub fn induced_counts(words: &Words, n: u64, k: u64) -> (u64, u64) {
    assert!(k >= 1);
    let k = k as i64;
    let mut d = 0i64;
    let (mut count, mut downs) = (0u64, 0u64);
    let mut t = 0u64;
    let mut bit = |d: &mut i64, s: i64| {
        *d += s;
        if *d == k || *d == -k {
            count += 1;
            downs += u64::from(*d < 0);
            *d = 0;
        }
    };
    while t < n {
        let mut w = words.get(t >> 6);
        let bits = (n - t).min(64);
        let mut left = bits;
        while left >= 8 {
            let b = (w & 0xFF) as usize;
            if d + i64::from(BYTES.hi[b]) < k && d + i64::from(BYTES.lo[b]) > -k {
                d += i64::from(BYTES.sum[b]);
            } else {
                for j in 0..8 {
                    bit(&mut d, step_of(w, j));
                }
            }
            w >>= 8;
            left -= 8;
        }
        for j in 0..left {
            bit(&mut d, step_of(w, j));
        }
        t += bits;
    }
    (count, downs)
}

/// Both sides and the middle of the induced-walk sandwich on `T(k, x, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandwich {
    /// `l^(2k)(ceil(x / 2k), n) - 1`
    pub lower: i64,
    pub mid: u64,
    /// `L^(k/2)(floor(x / (k/2)), n)`, with `k/2` rounded down
    pub upper: u64,
    pub ok: bool,
}

pub fn ceil_div(x: i64, d: i64) -> i64 {
    -((-x).div_euclid(d))
}

/// Evaluate the sandwich from precomputed pieces.
pub fn sandwich_from(
    k: u64,
    x: i64,
    tally: &ExcursionTally,
    double: &InducedWalk,
    half: &InducedWalk,
) -> Sandwich {
    let (k2, kh) = (2 * k as i64, (k / 2) as i64);
    let lower = double.down_steps(ceil_div(x, k2)) as i64 - 1;
    let mid = tally.get(x);
    let upper = half.local_time(x.div_euclid(kh));
    Sandwich {
        lower,
        mid,
        upper,
        ok: lower <= mid as i64 && mid <= upper,
    }
}

pub fn sandwich_check(traj: &Trajectory, k: u64, x: i64, n: u64) -> Result<Sandwich, ExcursionError> {
    check_depth(k, 2)?;
    let tally = excursion_field(traj, k, n)?;
    let double = induce_walk(traj, 2 * k, n)?;
    let half = induce_walk(traj, k / 2, n)?;
    Ok(sandwich_from(k, x, &tally, &double, &half))
}

/// Source of the excursion aggregates the distance bounds need.
pub trait ExcursionSource {
    fn horizon(&self) -> u64;
    fn range(&self) -> u64;
    /// `sum_j T(depth, j * depth, n)`, or `None` if not available.
    fn lattice_count(&self, depth: u64) -> Option<u64>;
    /// `sum_x min(T(depth, x, n), cap)`, or `None` if not available.
    fn truncated_sum(&self, depth: u64, cap: Cap) -> Option<u64>;
}

/// Aggregates computed on demand from an explicit trajectory prefix.
pub struct PathStats<'a> {
    traj: &'a Trajectory,
    n: u64,
    range: u64,
}

impl<'a> PathStats<'a> {
    pub fn new(traj: &'a Trajectory, n: u64) -> Result<Self, WalkError> {
        let range = traj.range_size(n)?;
        Ok(PathStats { traj, n, range })
    }

    pub fn tally(&self, depth: u64) -> ExcursionTally {
        excursion_field(self.traj, depth, self.n).expect("checked horizon")
    }
}

impl ExcursionSource for PathStats<'_> {
    fn horizon(&self) -> u64 {
        self.n
    }

    fn range(&self) -> u64 {
        self.range
    }

    fn lattice_count(&self, depth: u64) -> Option<u64> {
        (depth >= 1).then(|| self.tally(depth).lattice_count())
    }

    fn truncated_sum(&self, depth: u64, cap: Cap) -> Option<u64> {
        (depth >= 1).then(|| self.tally(depth).truncated_sum(cap))
    }
}
