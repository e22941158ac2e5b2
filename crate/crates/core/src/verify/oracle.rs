//! Ground-truth computations that share no code with the fast paths.

use statrs::distribution::{Binomial, DiscreteCDF};

use super::VerifyError;
use crate::excursion::Completion;

/// Largest path length the exhaustive enumerations accept.
pub const ENUMERATION_LIMIT: u32 = 20;

/// `T(k, x, n)` read straight off the definition: for each visit to `x` at
/// a time `j <= n`, look forward for the first of `x` and `x - k`.
///
/// `positions` is `S_0, ..., S_len` and `n <= len`.
pub fn brute_force_excursions(
    positions: &[i64],
    k: u64,
    x: i64,
    n: usize,
    completion: Completion,
) -> u64 {
    assert!(k >= 1, "depth must be positive");
    assert!(n < positions.len(), "n beyond the path");
    let target = x - k as i64;
    let mut count = 0;
    for j in 0..=n {
        if positions[j] != x {
            continue;
        }
        let mut hit = None;
        for (t, &s) in positions.iter().enumerate().skip(j + 1) {
            if s == x {
                break;
            }
            if s == target {
                hit = Some(t);
                break;
            }
        }
        let Some(t) = hit else { continue };
        if t > n {
            continue;
        }
        let counted = match completion {
            Completion::Reached => true,
            Completion::Returned => positions[t..=n].contains(&x),
        };
        if counted {
            count += 1;
        }
    }
    count
}

/// Exact path counts for `P(T(k, 0, n) >= a)` and `P(max S >= threshold)`
/// at one `n`, both over `total = 2^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReflectionCounts {
    pub k: u64,
    pub a: u64,
    pub n: u32,
    pub threshold: i64,
    pub excursions: u64,
    pub maxima: u64,
    pub total: u64,
}

/// Level the maximum is compared with: `2ka` when excursions must return,
/// `(2a - 1)k` when reaching `-k` completes them.
pub fn reflection_threshold(k: u64, a: u64, completion: Completion) -> i64 {
    let (k, a) = (k as i64, a as i64);
    match (completion, a) {
        (_, 0) => 0,
        (Completion::Returned, a) => 2 * k * a,
        (Completion::Reached, a) => (2 * a - 1) * k,
    }
}

/// Enumerate all `2^n_max` paths once and read off the counts for every
/// prefix length `n = 0..=n_max`.
pub fn reflection_counts(
    k: u64,
    a: u64,
    n_max: u32,
    completion: Completion,
) -> Result<Vec<ReflectionCounts>, VerifyError> {
    if n_max > ENUMERATION_LIMIT {
        return Err(VerifyError::TooLarge {
            n: n_max,
            limit: ENUMERATION_LIMIT,
        });
    }
    assert!(k >= 1);
    let threshold = reflection_threshold(k, a, completion);
    let ki = k as i64;
    let len = n_max as usize + 1;
    let mut exc = vec![0u64; len];
    let mut maxima = vec![0u64; len];
    for bits in 0..(1u64 << n_max) {
        let (mut s, mut max, mut count) = (0i64, 0i64, 0u64);
        // 1: at 0 since the last excursion, 2: reached -k, waiting to return
        let mut state = 1u8;
        for n in 0..len {
            if n > 0 {
                s += if bits >> (n - 1) & 1 == 1 { 1 } else { -1 };
                max = max.max(s);
                if s == 0 {
                    if state == 2 {
                        count += 1;
                    }
                    state = 1;
                } else if s == -ki && state == 1 {
                    match completion {
                        Completion::Reached => {
                            count += 1;
                            state = 0;
                        }
                        Completion::Returned => state = 2,
                    }
                }
            }
            if count >= a {
                exc[n] += 1;
            }
            if max >= threshold {
                maxima[n] += 1;
            }
        }
    }
    Ok((0..len)
        .map(|n| {
            // every prefix of length n appears 2^(n_max - n) times
            let rep = 1u64 << (n_max as usize - n);
            ReflectionCounts {
                k,
                a,
                n: n as u32,
                threshold,
                excursions: exc[n] / rep,
                maxima: maxima[n] / rep,
                total: 1 << n,
            }
        })
        .collect())
}

/// `P(max_{t <= n} S_t <= m)` for `m >= 0`, from the reflection principle
/// `P(M_n >= b) = P(S_n >= b) + P(S_n >= b + 1)`.
pub fn max_at_most_probability(n: u64, m: i64) -> f64 {
    assert!(m >= 0);
    let tail = |s: i64| -> f64 {
        // P(S_n >= s) with S_n = 2B - n
        let b = (n as i64 + s + 1).div_euclid(2);
        if b <= 0 {
            1.0
        } else if b > n as i64 {
            0.0
        } else {
            let bin = Binomial::new(0.5, n).expect("valid binomial");
            bin.sf((b - 1) as u64)
        }
    };
    (1.0 - tail(m + 1) - tail(m + 2)).max(0.0)
}
