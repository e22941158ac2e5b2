//! One-pass excursion aggregates for many depths at once.
//!
//! A down-step onto `y` at time `t` completes one excursion (reached rule)
//! from `y + d` for every depth `d` up to the height the walk climbed above
//! `y` since its previous visit there. Since that height exceeds `d` with
//! probability about `1/d`, scanning depths in increasing order and stopping
//! at the first miss costs O(1) per step on average, whatever the depth set.

use std::collections::BTreeMap;

use crate::excursion::{Cap, ExcursionSource};
use crate::sites::OffsetVec;
use crate::walk::Words;

/// What to accumulate for one depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthSpec {
    pub depth: u64,
    /// Truncation levels for `sum_x min(T, cap)`.
    pub caps: Vec<Cap>,
    /// Keep per-site counts (needed for the maximum and for finite caps).
    pub keep_counts: bool,
}

impl DepthSpec {
    pub fn lattice(depth: u64) -> Self {
        DepthSpec {
            depth,
            caps: Vec::new(),
            keep_counts: false,
        }
    }

    pub fn full(depth: u64, caps: Vec<Cap>) -> Self {
        DepthSpec {
            depth,
            caps,
            keep_counts: true,
        }
    }
}

#[derive(Clone, Debug)]
struct DepthState {
    depth: i64,
    mask: Option<i64>,
    lattice: u64,
    plain: u64,
    max: u64,
    caps: Vec<Cap>,
    truncated: Vec<u64>,
    counts: Option<OffsetVec<u32>>,
}

/// Aggregates of one depth at a point in time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthStats {
    pub depth: u64,
    /// `sum_j T(d, jd, n)`
    pub lattice: u64,
    /// `sum_x T(d, x, n)`
    pub plain: u64,
    /// `max_x T(d, x, n)`, 0 when counts are not kept
    pub max: u64,
    pub truncated: Vec<(Cap, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrackerSnapshot {
    pub n: u64,
    pub position: i64,
    pub min: i64,
    pub max: i64,
    pub depths: Vec<DepthStats>,
}

impl TrackerSnapshot {
    pub fn depth(&self, d: u64) -> Option<&DepthStats> {
        self.depths
            .binary_search_by_key(&d, |s| s.depth)
            .ok()
            .map(|i| &self.depths[i])
    }
}

impl ExcursionSource for TrackerSnapshot {
    fn horizon(&self) -> u64 {
        self.n
    }

    fn range(&self) -> u64 {
        (self.max - self.min + 1) as u64
    }

    fn lattice_count(&self, depth: u64) -> Option<u64> {
        if depth >= self.range() {
            return Some(0);
        }
        self.depth(depth).map(|s| s.lattice)
    }

    fn truncated_sum(&self, depth: u64, cap: Cap) -> Option<u64> {
        if depth >= self.range() || cap == Cap::Finite(0) {
            return Some(0);
        }
        let s = self.depth(depth)?;
        if cap == Cap::Infinite {
            return Some(s.plain);
        }
        s.truncated.iter().find(|(c, _)| *c == cap).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug)]
pub struct MultiDepthTracker {
    t: u64,
    pos: i64,
    min: i64,
    max: i64,
    /// last visit time + 1, 0 for unvisited sites
    last: OffsetVec<u64>,
    depths: Vec<DepthState>,
}

impl MultiDepthTracker {
    /// Tracker for the given depths. Entries for the same depth are merged.
    pub fn new(specs: &[DepthSpec]) -> Self {
        let mut merged: BTreeMap<u64, DepthSpec> = BTreeMap::new();
        for s in specs {
            assert!(s.depth >= 1, "depth must be positive");
            let e = merged
                .entry(s.depth)
                .or_insert_with(|| DepthSpec::lattice(s.depth));
            e.keep_counts |= s.keep_counts;
            for c in &s.caps {
                if !e.caps.contains(c) {
                    e.caps.push(*c);
                }
            }
        }
        let depths = merged
            .into_values()
            .map(|s| {
                let keep = s.keep_counts || s.caps.iter().any(|c| matches!(c, Cap::Finite(_)));
                let d = s.depth as i64;
                DepthState {
                    depth: d,
                    mask: (s.depth.is_power_of_two()).then_some(d - 1),
                    lattice: 0,
                    plain: 0,
                    max: 0,
                    truncated: vec![0; s.caps.len()],
                    caps: s.caps,
                    counts: keep.then(|| OffsetVec::with_window(-64, 64)),
                }
            })
            .collect();
        let mut last = OffsetVec::with_window(-64, 64);
        *last.get_mut(0) = 1;
        MultiDepthTracker {
            t: 0,
            pos: 0,
            min: 0,
            max: 0,
            last,
            depths,
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn position(&self) -> i64 {
        self.pos
    }

    pub fn range(&self) -> u64 {
        (self.max - self.min + 1) as u64
    }

    #[cold]
    fn grow(&mut self, x: i64) {
        self.last.ensure(x);
        for d in &mut self.depths {
            if let Some(c) = &mut d.counts {
                c.ensure(x);
            }
        }
    }

    #[inline(always)]
    pub fn step(&mut self, up: bool) {
        self.t += 1;
        let stamp = self.t + 1;
        if up {
            self.pos += 1;
            if self.pos > self.max {
                self.max = self.pos;
                if !self.last.contains(self.pos) {
                    self.grow(self.pos);
                }
            }
            let i = self.last.slot(self.pos);
            self.last.as_mut_slice()[i] = stamp;
            return;
        }
        self.pos -= 1;
        let y = self.pos;
        if y < self.min {
            self.min = y;
            if !self.last.contains(y) {
                self.grow(y);
            }
        }
        let iy = self.last.slot(y);
        let last = self.last.as_slice();
        let prev = last[iy];
        for ds in &mut self.depths {
            let x = y + ds.depth;
            if x > self.max || last[self.last.slot(x)] <= prev {
                break;
            }
            ds.plain += 1;
            let on_lattice = match ds.mask {
                Some(m) => x & m == 0,
                None => x.rem_euclid(ds.depth) == 0,
            };
            ds.lattice += u64::from(on_lattice);
            if let Some(c) = &mut ds.counts {
                let i = c.slot(x);
                let v = u64::from(c.as_slice()[i]);
                for (cap, acc) in ds.caps.iter().zip(ds.truncated.iter_mut()) {
                    *acc += u64::from(cap.admits(v));
                }
                c.as_mut_slice()[i] += 1;
                ds.max = ds.max.max(v + 1);
            } else {
                for (cap, acc) in ds.caps.iter().zip(ds.truncated.iter_mut()) {
                    debug_assert_eq!(*cap, Cap::Infinite);
                    *acc += 1;
                }
            }
        }
        self.last.as_mut_slice()[iy] = stamp;
    }

    /// Run steps until time `until` (absolute), reading increments from `words`.
    pub fn advance(&mut self, words: &Words, until: u64) {
        while self.t < until {
            let t = self.t;
            let off = t & 63;
            let bits = (64 - off).min(until - t);
            let w = words.get(t >> 6) >> off;
            for j in 0..bits {
                self.step((w >> j) & 1 == 1);
            }
        }
    }

    pub fn snapshot(&self) -> TrackerSnapshot {
        TrackerSnapshot {
            n: self.t,
            position: self.pos,
            min: self.min,
            max: self.max,
            depths: self
                .depths
                .iter()
                .map(|d| DepthStats {
                    depth: d.depth as u64,
                    lattice: d.lattice,
                    plain: d.plain,
                    max: d.max,
                    truncated: d.caps.iter().copied().zip(d.truncated.iter().copied()).collect(),
                })
                .collect(),
        }
    }

    /// Nonzero per-site counts of a depth kept with `keep_counts`.
    pub fn counts(&self, depth: u64) -> Option<BTreeMap<i64, u64>> {
        let d = self.depths.iter().find(|d| d.depth as u64 == depth)?;
        let c = d.counts.as_ref()?;
        Some(
            c.iter()
                .filter(|&(_, v)| v > 0)
                .map(|(x, v)| (x, u64::from(v)))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::excursion_field;
    use crate::walk::generate_walk;

    #[test]
    fn matches_single_depth_fields() {
        for seed in 0..12 {
            let w = generate_walk(seed, 3000);
            let specs: Vec<DepthSpec> = [1u64, 2, 3, 4, 7, 8, 16, 50]
                .iter()
                .map(|&d| DepthSpec::full(d, vec![Cap::Finite(2), Cap::Infinite]))
                .collect();
            let mut tr = MultiDepthTracker::new(&specs);
            for n in [0u64, 1, 100, 1000, 2999, 3000] {
                tr.advance(&w.words(), n);
                let snap = tr.snapshot();
                assert_eq!(snap.range(), w.range_size(n).unwrap());
                for &d in &[1u64, 2, 3, 4, 7, 8, 16, 50] {
                    let f = excursion_field(&w, d, n).unwrap();
                    let s = snap.depth(d).unwrap();
                    assert_eq!(s.lattice, f.lattice_count(), "seed {seed} d {d} n {n}");
                    assert_eq!(s.plain, f.plain_sum());
                    assert_eq!(s.max, f.max_count());
                    assert_eq!(snap.truncated_sum(d, Cap::Finite(2)), Some(f.truncated_sum(Cap::Finite(2))));
                    assert_eq!(tr.counts(d).unwrap(), f.counts);
                }
            }
        }
    }

    #[test]
    fn merges_duplicate_depths() {
        let tr = MultiDepthTracker::new(&[
            DepthSpec::lattice(4),
            DepthSpec::full(4, vec![Cap::Finite(3)]),
            DepthSpec::lattice(2),
        ]);
        let snap = tr.snapshot();
        assert_eq!(snap.depths.len(), 2);
        assert_eq!(snap.depth(4).unwrap().truncated, vec![(Cap::Finite(3), 0)]);
    }

    #[test]
    fn untracked_deep_layers_are_zero() {
        let mut tr = MultiDepthTracker::new(&[DepthSpec::lattice(1)]);
        let w = generate_walk(3, 50);
        tr.advance(&w.words(), 50);
        let snap = tr.snapshot();
        assert_eq!(snap.lattice_count(snap.range()), Some(0));
        assert_eq!(snap.lattice_count(2), None);
    }
}
