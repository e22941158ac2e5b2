//! Dense per-site storage over a contiguous window of the integers.

/// A vector indexed by `i64` sites, growing in either direction on demand.
///
/// Walks visit a window of width `O(sqrt n)`, so storing that window densely
/// beats a hash map by a wide margin in the per-step loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetVec<T> {
    base: i64,
    data: Vec<T>,
}

impl<T: Copy + Default> Default for OffsetVec<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Copy + Default> OffsetVec<T> {
    pub fn new() -> Self {
        OffsetVec {
            base: 0,
            data: Vec::new(),
        }
    }

    /// Storage covering `lo..=hi` up front.
    pub fn with_window(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi);
        OffsetVec {
            base: lo,
            data: vec![T::default(); (hi - lo + 1) as usize],
        }
    }

    /// Lowest site with storage.
    pub fn lo(&self) -> i64 {
        self.base
    }

    /// One past the highest site with storage.
    pub fn end(&self) -> i64 {
        self.base + self.data.len() as i64
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        x >= self.base && x < self.end()
    }

    /// Value at `x`, or the default outside the window.
    #[inline]
    pub fn get(&self, x: i64) -> T {
        if self.contains(x) {
            self.data[(x - self.base) as usize]
        } else {
            T::default()
        }
    }

    /// Index of `x` into [`Self::as_slice`]. `x` must be inside the window.
    #[inline]
    pub fn slot(&self, x: i64) -> usize {
        debug_assert!(self.contains(x));
        (x - self.base) as usize
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get_mut(&mut self, x: i64) -> &mut T {
        self.ensure(x);
        let i = self.slot(x);
        &mut self.data[i]
    }

    /// Grow so that `x` has storage. Doubles the allocation on the side that
    /// grows, so a walk of range `R` triggers `O(log R)` reallocations.
    pub fn ensure(&mut self, x: i64) {
        if self.data.is_empty() {
            self.base = x - 8;
            self.data = vec![T::default(); 17];
            return;
        }
        if x < self.base {
            let need = (self.base - x) as usize;
            let extra = need.max(self.data.len());
            let mut grown = vec![T::default(); extra + self.data.len()];
            grown[extra..].copy_from_slice(&self.data);
            self.data = grown;
            self.base -= extra as i64;
        } else if x >= self.end() {
            let need = (x - self.end() + 1) as usize;
            let extra = need.max(self.data.len());
            self.data.resize(self.data.len() + extra, T::default());
        }
    }

    /// Sites and values, in increasing site order, including defaults.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.base + i as i64, *v))
    }

    pub fn clear(&mut self) {
        self.data.fill(T::default());
    }
}
