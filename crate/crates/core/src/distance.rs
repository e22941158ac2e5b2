//! Per-layer and total distance bounds of the walk in the diagonal product,
//! evaluated from excursion aggregates and the layer sequences.

use std::fmt::Write as _;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::excursion::{Cap, ExcursionSource};
use crate::layers::{critical_layers, LayerError, LayerParams, LayerValue};
use crate::loglog;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("excursion depth {depth} (cap {cap:?}) is not available from this source")]
    Untracked { depth: u64, cap: Option<Cap> },
    #[error("layer {0} is not part of the model")]
    NoLayer(usize),
    #[error(transparent)]
    Layer(#[from] LayerError),
}

/// Constants of the lower bound and its validity threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceConstants {
    pub sigma: f64,
    pub c0: f64,
    pub d2: f64,
}

impl Default for DistanceConstants {
    fn default() -> Self {
        DistanceConstants {
            sigma: 1.0,
            c0: 1.0,
            d2: 0.25,
        }
    }
}

/// `max(1, floor(k / 2))`, saturating for depths beyond `u64`.
pub fn half_depth(k: &LayerValue) -> Option<u64> {
    k.finite()
        .map(|v| v.to_u64().unwrap_or(u64::MAX).checked_div(2).unwrap_or(0).max(1))
}

/// Truncation `ceil(c0 l_s)`; caps above `horizon` cannot bind and are
/// returned as infinite.
pub fn lower_cap(l: &LayerValue, c0: f64, horizon: u64) -> Cap {
    match l {
        LayerValue::Infinite => Cap::Infinite,
        v => {
            let c = (c0 * v.to_f64()).ceil();
            if c > horizon as f64 {
                Cap::Infinite
            } else {
                Cap::Finite(c as u64)
            }
        }
    }
}

fn layer(p: &LayerParams, s: usize) -> Result<(&LayerValue, &LayerValue), DistanceError> {
    match (p.k.get(s), p.l.get(s)) {
        (Some(k), Some(l)) => Ok((k, l)),
        _ => Err(DistanceError::NoLayer(s)),
    }
}

/// `11 min{k_s sum_j T(h, jh, n) + range, range l_s}` with `h = max(1, floor(k_s/2))`.
/// Layers with `k_s = inf` contribute 0.
pub fn layer_upper(src: &impl ExcursionSource, p: &LayerParams, s: usize) -> Result<f64, DistanceError> {
    let (k, l) = layer(p, s)?;
    let Some(h) = half_depth(k) else {
        return Ok(0.0);
    };
    let range = src.range();
    let w = src
        .lattice_count(h)
        .ok_or(DistanceError::Untracked { depth: h, cap: None })?;
    let first = if w == 0 {
        range as f64
    } else {
        k.to_f64() * w as f64 + range as f64
    };
    let second = range as f64 * l.to_f64();
    Ok(11.0 * first.min(second))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerProxy {
    pub value: f64,
    /// `n >= 16` and `k_s <= d2 sqrt(n / L)`
    pub valid: bool,
}

/// `(sigma c0 / 16) sum_x min{T(k_s, x, n), ceil(c0 l_s)}`.
pub fn layer_lower_proxy(
    src: &impl ExcursionSource,
    p: &LayerParams,
    s: usize,
    c: &DistanceConstants,
) -> Result<LowerProxy, DistanceError> {
    let (k, l) = layer(p, s)?;
    let n = src.horizon();
    let valid = n >= 16 && k.to_f64() <= c.d2 * (n as f64 / loglog(n as f64)).sqrt();
    let Some(depth) = k.to_u64() else {
        return Ok(LowerProxy { value: 0.0, valid });
    };
    let cap = lower_cap(l, c.c0, n);
    let t = src.truncated_sum(depth, cap).ok_or(DistanceError::Untracked {
        depth,
        cap: Some(cap),
    })?;
    Ok(LowerProxy {
        value: c.sigma * c.c0 / 16.0 * t as f64,
        valid,
    })
}

/// `max{s : k_s <= range}`, with layer 0 always included.
pub fn s0_for_range(p: &LayerParams, range: u64) -> usize {
    let mut s = 0;
    while s + 1 < p.len() && p.k[s + 1].to_f64() <= range as f64 {
        s += 1;
    }
    s
}

/// `500 sum_{s <= s0} layer_upper(s)` and the `s0` used.
pub fn total_upper(src: &impl ExcursionSource, p: &LayerParams) -> Result<(f64, usize), DistanceError> {
    let s0 = s0_for_range(p, src.range());
    let mut sum = 0.0;
    for s in 0..=s0 {
        sum += layer_upper(src, p, s)?;
    }
    Ok((500.0 * sum, s0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TotalLower {
    /// max of valid proxies over `s <= s0'`, 0 when none is valid
    pub lower: f64,
    pub layers_evaluated: Vec<usize>,
    /// `(P(s2) + P(s2 + 1)) / 2`
    pub pair_g: f64,
    /// `(P(s3~) + P(s3~ + 1)) / 2`
    pub pair_h: f64,
}

/// Average of the proxies of `s` and `s + 1`; a missing `s + 1` counts as 0.
pub fn pair_proxy(
    src: &impl ExcursionSource,
    p: &LayerParams,
    s: usize,
    c: &DistanceConstants,
) -> Result<f64, DistanceError> {
    let a = layer_lower_proxy(src, p, s, c)?.value;
    let b = if s + 1 < p.len() {
        layer_lower_proxy(src, p, s + 1, c)?.value
    } else {
        0.0
    };
    Ok(0.5 * (a + b))
}

pub fn total_lower(
    src: &impl ExcursionSource,
    p: &LayerParams,
    r: f64,
    c: &DistanceConstants,
) -> Result<TotalLower, DistanceError> {
    let n = src.horizon();
    if n < 16 {
        return Ok(TotalLower {
            lower: 0.0,
            layers_evaluated: Vec::new(),
            pair_g: 0.0,
            pair_h: 0.0,
        });
    }
    let cl = critical_layers(p, n, r, None)?;
    let mut lower = 0.0f64;
    let mut evaluated = Vec::new();
    for s in 0..=cl.s0_prime {
        let lp = layer_lower_proxy(src, p, s, c)?;
        if lp.valid {
            lower = lower.max(lp.value);
            evaluated.push(s);
        }
    }
    Ok(TotalLower {
        lower,
        layers_evaluated: evaluated,
        pair_g: pair_proxy(src, p, cl.s2, c)?,
        pair_h: pair_proxy(src, p, cl.s3_tilde, c)?,
    })
}

/// One row of the per-layer table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDistanceBounds {
    pub s: usize,
    pub n: u64,
    pub k_s: LayerValue,
    pub l_s: LayerValue,
    pub upper: f64,
    pub lower_proxy: f64,
    pub valid: bool,
    pub sigma: f64,
    pub c0: f64,
}

/// Bounds for layers `0..=s_max`.
pub fn layer_table(
    src: &impl ExcursionSource,
    p: &LayerParams,
    s_max: usize,
    c: &DistanceConstants,
) -> Result<Vec<LayerDistanceBounds>, DistanceError> {
    (0..=s_max.min(p.len() - 1))
        .map(|s| {
            let lp = layer_lower_proxy(src, p, s, c)?;
            Ok(LayerDistanceBounds {
                s,
                n: src.horizon(),
                k_s: p.k[s].clone(),
                l_s: p.l[s].clone(),
                upper: layer_upper(src, p, s)?,
                lower_proxy: lp.value,
                valid: lp.valid,
                sigma: c.sigma,
                c0: c.c0,
            })
        })
        .collect()
}

pub const LAYER_CSV_HEADER: &str = "n,s,k_s,l_s,upper,lower_proxy,valid";

pub fn layer_csv(rows: &[LayerDistanceBounds]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n, r.s, r.k_s, r.l_s, r.upper, r.lower_proxy, r.valid as u8
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excursion::{excursion_field, PathStats};
    use crate::walk::Trajectory;

    fn layers(k: &[u64], l: &[Option<u64>]) -> LayerParams {
        LayerParams {
            m0: 2.0,
            k: k.iter().map(|&v| LayerValue::from_u64(v)).collect(),
            l: l.iter()
                .map(|v| v.map_or(LayerValue::Infinite, LayerValue::from_u64))
                .collect(),
            source: None,
            x_max: None,
        }
    }

    #[test]
    fn empty_walk_upper() {
        let w = Trajectory::from_increments(&[]).unwrap();
        let src = PathStats::new(&w, 0).unwrap();
        let p = layers(&[1, 2], &[Some(1), Some(2)]);
        assert_eq!(layer_upper(&src, &p, 0).unwrap(), 11.0);
        assert_eq!(total_upper(&src, &p).unwrap(), (500.0 * 11.0, 0));
        assert_eq!(layer_lower_proxy(&src, &p, 0, &DistanceConstants::default()).unwrap().value, 0.0);
    }

    #[test]
    fn half_depth_example() {
        let w = Trajectory::from_positions(&[0, 1, 2, 1, 0, -1, -2, -1, 0]).unwrap();
        let src = PathStats::new(&w, 8).unwrap();
        let t1 = excursion_field(&w, 1, 8).unwrap();
        let first = 2 * (t1.get(-1) + t1.get(0) + t1.get(1) + t1.get(2)) + 5;
        assert_eq!(first, 13);
        for l in [1u64, 2, 3, 100] {
            let p = layers(&[1, 2, 4], &[Some(1), Some(l), Some(8)]);
            let want = 11.0 * (first as f64).min(5.0 * l as f64);
            assert_eq!(layer_upper(&src, &p, 1).unwrap(), want);
        }
        let p = layers(&[1, 2], &[Some(1), None]);
        assert_eq!(layer_upper(&src, &p, 1).unwrap(), 11.0 * 13.0);
    }

    #[test]
    fn infinite_k_contributes_nothing() {
        let w = Trajectory::from_positions(&[0, 1, 0]).unwrap();
        let src = PathStats::new(&w, 2).unwrap();
        let p = LayerParams {
            m0: 2.0,
            k: vec![LayerValue::from_u64(1), LayerValue::Infinite],
            l: vec![LayerValue::from_u64(1), LayerValue::from_u64(2)],
            source: None,
            x_max: None,
        };
        assert_eq!(layer_upper(&src, &p, 1).unwrap(), 0.0);
        let lp = layer_lower_proxy(&src, &p, 1, &DistanceConstants::default()).unwrap();
        assert_eq!(lp.value, 0.0);
        assert!(!lp.valid);
    }

    #[test]
    fn s0_scan() {
        let p = layers(&[1, 2, 4, 8], &[Some(1), Some(2), Some(4), Some(8)]);
        assert_eq!(s0_for_range(&p, 5), 2);
        assert_eq!(s0_for_range(&p, 1), 0);
        assert_eq!(s0_for_range(&p, 100), 3);
    }

    #[test]
    fn caps() {
        assert_eq!(lower_cap(&LayerValue::from_u64(3), 1.0, 100), Cap::Finite(3));
        assert_eq!(lower_cap(&LayerValue::from_u64(3), 0.5, 100), Cap::Finite(2));
        assert_eq!(lower_cap(&LayerValue::from_u64(300), 1.0, 100), Cap::Infinite);
        assert_eq!(lower_cap(&LayerValue::Infinite, 1.0, 100), Cap::Infinite);
        assert_eq!(half_depth(&LayerValue::from_u64(1)), Some(1));
        assert_eq!(half_depth(&LayerValue::from_u64(5)), Some(2));
        assert_eq!(half_depth(&LayerValue::Infinite), None);
    }
}
