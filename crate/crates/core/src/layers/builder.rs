use num_bigint::BigUint;
use num_traits::One;

use super::{big_ln, validate_speed, LayerError, LayerParams, LayerValue, SpeedFunction};

/// Slack in log space when classifying predicates near equality.
const LOG_TOL: f64 = 1e-12;

/// `round(m0 * 2^32)`: the growth factor in 32.32 fixed point.
pub(super) fn m0_fixed(m0: f64) -> BigUint {
    BigUint::from((m0 * 4294967296.0).round() as u128)
}

/// `ceil(v * m0)`; exact when `m0` is a multiple of 2^-32.
fn ceil_mul(v: &BigUint, m0: f64) -> BigUint {
    let p = v * m0_fixed(m0);
    let q = &p >> 32u32;
    if (&q << 32u32) == p {
        q
    } else {
        q + 1u32
    }
}

/// `round(a / b)`, halves up.
fn round_div(a: &BigUint, b: &BigUint) -> BigUint {
    (a * 2u32 + b) / (b * 2u32)
}

/// Minimal `y` in `[lo, cap]` with `pred(y)`, for a monotone predicate.
fn min_true(lo: &BigUint, cap: &BigUint, pred: impl Fn(&BigUint) -> bool) -> Option<BigUint> {
    if pred(lo) {
        return Some(lo.clone());
    }
    let mut below = lo.clone();
    let mut hi = lo * 2u32;
    while !pred(&hi) {
        if &hi > cap {
            return None;
        }
        below = hi.clone();
        hi *= 2u32;
    }
    while &hi - &below > BigUint::one() {
        let mid: BigUint = (&below + &hi) >> 1u32;
        if pred(&mid) {
            hi = mid;
        } else {
            below = mid;
        }
    }
    Some(hi)
}

/// Layers for `f` with growth factor `m0`, stopping after the first layer
/// whose `(k l)^2` exceeds `x_max` (that layer is kept, since `fbar` needs
/// `k_{s+1}` just below the horizon).
///
/// With `g(y) = f(y^2) / y`, the step from `(k, l)` searches
/// `y1 = min{y >= m0^2 k l : y / g(y) >= m0 k}` and
/// `y2 = min{y >= m0^2 k l : g(y) >= m0 l}`. When `y2 >= y1` the next layer
/// takes `l' = ceil(m0 l)`, `k' = max(ceil(m0 k), round(y2 / l'))`, otherwise
/// `k' = ceil(m0 k)`, `l' = max(ceil(m0 l), round(y1 / k'))`. No `y1` gives
/// `l' = inf`; no `y2` (a bounded `g`) gives `k' = inf`.
pub fn build_layers(f: &SpeedFunction, m0: f64, x_max: f64) -> Result<LayerParams, LayerError> {
    if !(m0 > 1.0 && m0.is_finite()) {
        return Err(LayerError::Invalid(format!("m0 must exceed 1, got {m0}")));
    }
    if !(x_max >= 1.0 && x_max.is_finite()) {
        return Err(LayerError::Invalid(format!("bad horizon {x_max}")));
    }
    let report = validate_speed(f, x_max.max(100.0), 200);
    if !report.accepted {
        let why = match report.violations.first() {
            Some(v) => format!("{} decreases between x = {} and x = {}", v.check, v.x_a, v.x_b),
            None => format!("f(1) = {}", report.f_at_one),
        };
        return Err(LayerError::Rejected(why));
    }
    let ln_g = |y: &BigUint| {
        let ly = big_ln(y);
        f.ln_eval(2.0 * ly) - ly
    };
    let ln_max = x_max.ln();
    let mut k = BigUint::one();
    let mut l = BigUint::one();
    let mut ks = vec![LayerValue::Finite(k.clone())];
    let mut ls = vec![LayerValue::Finite(l.clone())];
    while 2.0 * (big_ln(&k) + big_ln(&l)) <= ln_max {
        let y0 = ceil_mul(&ceil_mul(&(&k * &l), m0), m0);
        let cap = {
            let root = BigUint::from(x_max.sqrt().ceil() as u128);
            y0.clone().max(root) << 20u32
        };
        let target_k = (m0.ln()) + big_ln(&k);
        let target_l = (m0.ln()) + big_ln(&l);
        let y1 = min_true(&y0, &cap, |y| big_ln(y) - ln_g(y) >= target_k - LOG_TOL);
        let y2 = min_true(&y0, &cap, |y| ln_g(y) >= target_l - LOG_TOL);
        match (y1, y2) {
            (None, _) => {
                ks.push(LayerValue::Finite(ceil_mul(&k, m0)));
                ls.push(LayerValue::Infinite);
                break;
            }
            (Some(_), None) => {
                ks.push(LayerValue::Infinite);
                ls.push(LayerValue::Finite(ceil_mul(&l, m0)));
                break;
            }
            (Some(y1), Some(y2)) => {
                if y2 >= y1 {
                    let nl = ceil_mul(&l, m0);
                    k = ceil_mul(&k, m0).max(round_div(&y2, &nl));
                    l = nl;
                } else {
                    let nk = ceil_mul(&k, m0);
                    l = ceil_mul(&l, m0).max(round_div(&y1, &nk));
                    k = nk;
                }
                ks.push(LayerValue::Finite(k.clone()));
                ls.push(LayerValue::Finite(l.clone()));
            }
        }
    }
    Ok(LayerParams {
        m0,
        k: ks,
        l: ls,
        source: Some(f.to_string()),
        x_max: Some(x_max),
    })
}

/// Layers whose last entry is infinite or has `k > n + 1`, so that every
/// critical index at times up to `n` has a successor. Grows the horizon
/// until that holds.
pub fn build_layers_covering(f: &SpeedFunction, m0: f64, n: u64) -> Result<LayerParams, LayerError> {
    let need = (n as f64) + 1.0;
    let mut x_max = (need * need).max(16.0);
    loop {
        let p = build_layers(f, m0, x_max)?;
        if p.is_closed() || p.k.last().unwrap().to_f64() > need {
            return Ok(p);
        }
        if x_max > 1e150 {
            return Err(LayerError::Horizon(format!(
                "k_s stays below {need} up to x = {x_max:e}"
            )));
        }
        x_max *= x_max;
    }
}
